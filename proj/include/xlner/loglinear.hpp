#ifndef XLNER_LOGLINEAR_HPP_
#define XLNER_LOGLINEAR_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "xlner/corpus.hpp"
#include "xlner/crf.hpp"
#include "xlner/features.hpp"
#include "xlner/lbfgs.hpp"

namespace xlner {

// Structured description of one feature. The canonical string is
// attr [ "|tp=" PREV ] "|t=" TAG [ "|lang=" code ].
struct FeatureKey {
  std::string attr;
  std::string language;  // empty unless language-conjoined
  int prev = -1;         // -1: unigram feature; bos_index: sentence start
  TagId tag = 0;

  bool operator==(const FeatureKey&) const = default;
};

std::string feature_string(const FeatureKey& key, const TagSet& tagset);

// Feature string -> dense id. After freeze(), lookups of unseen strings
// return -1 and add() refuses to allocate.
class FeatureIndex {
 public:
  int add(const FeatureKey& key, const TagSet& tagset);
  int lookup(const std::string& feature) const;
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  int size() const { return static_cast<int>(keys_.size()); }
  const FeatureKey& key(int id) const { return keys_[static_cast<std::size_t>(id)]; }
  const std::string& name(int id) const { return names_[static_cast<std::size_t>(id)]; }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<FeatureKey> keys_;
  std::vector<std::string> names_;
  bool frozen_ = false;
};

// Attribute ids of one sentence, resolved against a model's tables.
// Unknown attributes are dropped.
struct CompiledSentence {
  int length = 0;
  std::vector<std::vector<int>> unigram;  // per position
  std::vector<std::vector<int>> pair;     // per position
};

struct LogLinearTrainConfig {
  LbfgsConfig lbfgs;
  double l2 = 1.0;
  int threads = 1;
};

class LogLinearModel {
 public:
  LogLinearModel() = default;
  LogLinearModel(TagSet tagset, FeatureTemplateSet templates, bool conjoin_language);

  // Allocates every feature that fires on a gold edge of `corpus`, plus the
  // full tag-bigram block (per language when conjoined), then freezes.
  void build_index(const Corpus& corpus);

  const TagSet& tagset() const { return tagset_; }
  const FeatureTemplateSet& templates() const { return templates_; }
  bool conjoin() const { return conjoin_; }
  const FeatureIndex& index() const { return index_; }
  const std::vector<std::string>& languages() const { return languages_; }
  bool knows_language(const std::string& code) const;

  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  // Language recorded for tagging input that carries none.
  const std::string& default_language() const { return default_language_; }
  void set_default_language(std::string code) { default_language_ = std::move(code); }

  CompiledSentence compile(const Sentence& sentence) const;
  LogLattice lattice(const CompiledSentence& sentence) const;
  LogLattice lattice(const Sentence& sentence) const { return lattice(compile(sentence)); }

  // Adds (scale * marginal) to each active feature's slot in grad.
  void accumulate(const CompiledSentence& sentence, const LogLattice& edge_weights, double scale,
                  std::vector<double>& grad) const;

  std::vector<TagId> predict(const Sentence& sentence) const;

  void save(const std::filesystem::path& path) const;
  static LogLinearModel load(const std::filesystem::path& path);
  std::string serialize() const;
  static LogLinearModel deserialize(const std::string& bytes);

 private:
  int unigram_slot(int attr, TagId tag) const;
  void register_key(const FeatureKey& key, int id);
  int attr_id(std::unordered_map<std::string, int>& dict, const std::string& attr, const std::string& language,
              int width, std::vector<int>& table);

  TagSet tagset_;
  FeatureTemplateSet templates_ = FeatureTemplateSet::standard();
  bool conjoin_ = false;
  FeatureIndex index_;
  std::vector<double> weights_;
  std::vector<std::string> languages_;
  std::string default_language_;

  // attr (with "\x1f" + language when conjoined) -> attr id
  std::unordered_map<std::string, int> unigram_attrs_;
  std::unordered_map<std::string, int> pair_attrs_;
  std::vector<int> unigram_table_;  // [attr][k] -> feature id or -1
  std::vector<int> pair_table_;     // [attr][(k+1)][k] -> feature id or -1
};

// Sum of log p(tags | sentence) over the batch minus l2/2 ||w||^2, and its
// gradient (observed minus expected feature counts minus l2 w).
double loglik_and_gradient(const LogLinearModel& model, const std::vector<CompiledSentence>& compiled,
                           const Corpus& batch, double l2, std::vector<double>& grad, int threads = 1);
double loglik_and_gradient(const LogLinearModel& model, const Corpus& batch, double l2, std::vector<double>& grad);

struct LogLinearTrainResult {
  LbfgsResult optimizer;
  std::vector<double> objective_trace;
};

LogLinearTrainResult train_lbfgs(LogLinearModel& model, const Corpus& train, const LogLinearTrainConfig& config,
                                 const LbfgsCallback& callback = {});

}  // namespace xlner

#endif  // XLNER_LOGLINEAR_HPP_
