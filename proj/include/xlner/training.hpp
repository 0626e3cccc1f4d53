#ifndef XLNER_TRAINING_HPP_
#define XLNER_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "xlner/adadelta.hpp"
#include "xlner/corpus.hpp"
#include "xlner/eval.hpp"
#include "xlner/loglinear.hpp"
#include "xlner/neural.hpp"

namespace xlner {

struct SourceCorpus {
  std::string language;
  Corpus corpus;
};

struct TransferTask {
  std::string target_language;
  Corpus target;  // training sentences in the target language
  std::vector<SourceCorpus> sources;
  double mu = 1.0;  // weight of every source sentence's log-likelihood
  Corpus dev;       // target-language model selection set

  // Throws kUsage for mu < 0 and kData for an empty target/dev set, a dev
  // sentence in another language or a tag outside the tagset.
  void validate(const TagSet& tagset) const;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 1;
  AdaDeltaConfig adadelta;
  LogLinearTrainConfig loglinear;
  int threads = 1;
  // Checkpoint directory; empty disables all file output.
  std::filesystem::path checkpoint_dir;
  int checkpoint_every = 1;  // 0: no per-epoch model files
  // Return the last epoch's parameters instead of the best dev epoch.
  bool final_epoch = false;
  // history wall_ms is 0 unless enabled, so histories are reproducible.
  bool record_wall_time = false;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_p = 0.0;
  double dev_r = 0.0;
  double dev_f1 = 0.0;
  std::int64_t wall_ms = 0;
};

std::string history_line(const EpochRecord& record);
std::string history_jsonl(const std::vector<EpochRecord>& history);

using EpochCallback = std::function<void(const EpochRecord&)>;

// -[sum over target log p + mu * sum over sources log p]. Source sentences
// are dropped entirely when mu == 0, so the value is then bitwise the
// target-only loss. Fills grad when non-null.
double joint_loss(const NeuralModel& model, const Corpus& target_batch,
                  const std::vector<const Corpus*>& source_batches, double mu, RealBuffer* grad,
                  int threads = 1);

EvalReport evaluate(const NeuralModel& model, const Corpus& gold, int threads = 1);
EvalReport evaluate(const LogLinearModel& model, const Corpus& gold, int threads = 1);

struct NeuralTrainResult {
  NeuralModel model;  // best dev epoch, or the last one with final_epoch
  int selected_epoch = 0;
  double selected_dev_f1 = 0.0;
  std::vector<EpochRecord> history;
};

// AdaDelta over batches of the shuffled union of target and (mu-weighted)
// source sentences; one epoch is one pass over the union.
NeuralTrainResult train_neural(const NeuralModel& initial, const TransferTask& task, const TrainConfig& config,
                               const EpochCallback& on_epoch = {});

struct LogLinearTrainOutcome {
  LogLinearModel model;
  LbfgsResult optimizer;
  std::vector<EpochRecord> history;  // one record for the converged model
};

// L-BFGS on the unweighted concatenation of target and source sentences,
// with features conjoined with the language. Sources are ignored when
// mu == 0, which gives the target-only baseline.
LogLinearTrainOutcome train_loglinear(const TransferTask& task, const TrainConfig& config, const TagSet& tagset);

}  // namespace xlner

#endif  // XLNER_TRAINING_HPP_
