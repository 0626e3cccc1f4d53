#ifndef XLNER_TOOLS_COMMANDS_HPP_
#define XLNER_TOOLS_COMMANDS_HPP_

#include <string>
#include <vector>

#include "xlner/config.hpp"
#include "xlner/corpus.hpp"
#include "xlner/training.hpp"

namespace xlner::cli {

// Target splits plus sampled source corpora, as read from a manifest.
struct ExperimentData {
  TagSet tagset;
  std::string target_language;
  Splits target;
  std::vector<SourceCorpus> sources;
};

ExperimentData load_experiment_data(const ExperimentConfig& config);

struct TrainSummary {
  double dev_f1 = 0.0;
  double test_f1 = 0.0;
  int selected_epoch = 0;
};

// Trains per the config and writes best.model, history.jsonl,
// config.resolved and report.json into config.out.
TrainSummary train_experiment(const ExperimentConfig& config);

// Full command line (argv[0] included). Returns the process exit code;
// errors go to stderr.
int run(const std::vector<std::string>& args);

}  // namespace xlner::cli

#endif  // XLNER_TOOLS_COMMANDS_HPP_
