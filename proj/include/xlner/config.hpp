#ifndef XLNER_CONFIG_HPP_
#define XLNER_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xlner/neural.hpp"
#include "xlner/training.hpp"

namespace xlner {

enum class ModelKind { kLogLinear, kNeuralMono, kNeuralXling };

std::string model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);  // throws kUsage

// Everything one experiment needs. Serialized as flat `key = value` lines;
// see ExperimentConfig::keys() for the accepted names.
struct ExperimentConfig {
  std::filesystem::path manifest;
  ModelKind model_kind = ModelKind::kLogLinear;
  std::filesystem::path out = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  // Target split; sources are sampled down to source_size (0 keeps all).
  std::size_t train_size = 100;
  std::size_t dev_size = 1000;
  std::size_t test_size = 1000;
  std::size_t source_size = 10000;
  double mu = 1.0;

  int epochs = 100;
  int batch_size = 32;
  int checkpoint_every = 1;
  bool final_epoch = false;
  bool record_wall_time = false;
  double rho = 0.95;
  double adadelta_epsilon = 1e-6;
  double learning_rate = 1.0;

  double l2 = 1.0;
  int lbfgs_memory = 10;
  double lbfgs_tol = 1e-5;
  int lbfgs_max_iter = 500;

  Dims dims;
  bool tag_dependent_emission = false;
  int word_min_count = 2;
  std::vector<std::string> entity_types = {"per", "loc", "org", "misc"};

  // Applies one key; throws kUsage for an unknown key or a bad value.
  void set(std::string_view key, std::string_view value);
  // Fully resolved form, one key per line in a fixed order.
  std::string to_text() const;

  TrainConfig train_config() const;
  NeuralConfig neural_config() const;
  SplitSpec split_spec() const;

  static const std::vector<std::string>& keys();
};

// Parses `key = value` lines; '#' starts a comment. Later keys win.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace xlner

#endif  // XLNER_CONFIG_HPP_
