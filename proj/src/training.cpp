#include "xlner/training.hpp"

#include <chrono>
#include <cmath>
#include "json.hpp"

#include "xlner/error.hpp"
#include "xlner/io.hpp"
#include "xlner/rng.hpp"

namespace xlner {

namespace {

void check_tags(const Corpus& corpus, const TagSet& tagset, const std::string& what) {
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto& ls = corpus[s];
    if (ls.tags.size() != ls.sentence.size() || ls.tags.empty()) {
      fail(ErrorKind::kData, what + " sentence " + std::to_string(s) + " has mismatched or empty tags");
    }
    for (TagId t : ls.tags) {
      if (t < 0 || t >= tagset.size()) fail(ErrorKind::kData, what + " sentence " + std::to_string(s) + " has an invalid tag");
    }
  }
}

template <typename Model>
EvalReport evaluate_with(const Model& model, const Corpus& gold, int threads) {
  std::vector<std::vector<TagId>> pred(gold.size());
  parallel_chunks(gold.size(), threads, [&](int, std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) pred[s] = model.predict(gold[s].sentence);
  });
  return entity_f1(gold, pred, model.tagset());
}

EpochRecord record_for(int epoch, double loss, const EvalReport& dev) {
  EpochRecord r;
  r.epoch = epoch;
  r.train_loss = loss;
  r.dev_p = dev.precision;
  r.dev_r = dev.recall;
  r.dev_f1 = dev.f1;
  return r;
}

}  // namespace

void TransferTask::validate(const TagSet& tagset) const {
  if (!(mu >= 0.0)) fail(ErrorKind::kUsage, "mu must be non-negative");
  if (target_language.empty()) fail(ErrorKind::kUsage, "target language is not set");
  if (target.empty()) fail(ErrorKind::kData, "target training corpus is empty");
  if (dev.empty()) fail(ErrorKind::kData, "dev corpus is empty; model selection is impossible");
  check_tags(target, tagset, "target");
  check_tags(dev, tagset, "dev");
  for (const auto& src : sources) check_tags(src.corpus, tagset, "source " + src.language);
  for (const auto& ls : dev) {
    if (ls.sentence.language != target_language) {
      fail(ErrorKind::kData, "dev sentence in language '" + ls.sentence.language + "', expected '" +
                                 target_language + "'");
    }
  }
}

std::string history_line(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["dev_p"] = r.dev_p;
  j["dev_r"] = r.dev_r;
  j["dev_f1"] = r.dev_f1;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

std::string history_jsonl(const std::vector<EpochRecord>& history) {
  std::string out;
  for (const auto& r : history) out += history_line(r) + "\n";
  return out;
}

double joint_loss(const NeuralModel& model, const Corpus& target_batch,
                  const std::vector<const Corpus*>& source_batches, double mu, RealBuffer* grad,
                  int threads) {
  if (!(mu >= 0.0)) fail(ErrorKind::kUsage, "mu must be non-negative");
  std::vector<WeightedSentence> batch;
  for (const auto& ls : target_batch) batch.push_back({&ls, 1.0});
  if (mu > 0.0) {
    for (const Corpus* source : source_batches) {
      for (const auto& ls : *source) batch.push_back({&ls, mu});
    }
  }
  return grad ? model.loss_and_gradients(batch, *grad, threads) : model.loss(batch);
}

EvalReport evaluate(const NeuralModel& model, const Corpus& gold, int threads) {
  return evaluate_with(model, gold, threads);
}

EvalReport evaluate(const LogLinearModel& model, const Corpus& gold, int threads) {
  return evaluate_with(model, gold, threads);
}

NeuralTrainResult train_neural(const NeuralModel& initial, const TransferTask& task, const TrainConfig& config,
                               const EpochCallback& on_epoch) {
  task.validate(initial.tagset());
  if (config.epochs < 1) fail(ErrorKind::kUsage, "epochs must be at least 1");
  if (config.batch_size < 1) fail(ErrorKind::kUsage, "batch size must be at least 1");
  if (!initial.has_language(task.target_language)) {
    fail(ErrorKind::kUsage, "model has no parameters for target language '" + task.target_language + "'");
  }
  std::vector<WeightedSentence> stream;
  for (const auto& ls : task.target) stream.push_back({&ls, 1.0});
  if (task.mu > 0.0) {
    for (const auto& src : task.sources) {
      if (!initial.has_language(src.language)) {
        fail(ErrorKind::kUsage, "model has no parameters for source language '" + src.language + "'");
      }
      for (const auto& ls : src.corpus) stream.push_back({&ls, task.mu});
    }
  }
  if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);

  NeuralTrainResult result;
  result.model = initial;
  NeuralModel& model = result.model;
  AdaDeltaState state;
  RealBuffer grad;
  RealBuffer best_values;
  double best_f1 = -1.0;
  std::vector<WeightedSentence> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    SplitMix64 rng(derive_seed(config.seed, 0x45504F00ULL + static_cast<std::uint64_t>(epoch)));
    shuffle(stream, rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < stream.size(); b += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t e = std::min(stream.size(), b + static_cast<std::size_t>(config.batch_size));
      batch.assign(stream.begin() + static_cast<std::ptrdiff_t>(b), stream.begin() + static_cast<std::ptrdiff_t>(e));
      const double loss = model.loss_and_gradients(batch, grad, config.threads);
      if (!std::isfinite(loss)) fail(ErrorKind::kNumeric, "non-finite training loss in epoch " + std::to_string(epoch));
      epoch_loss += loss;
      adadelta_step(model.params().values(), grad, state, config.adadelta);
    }
    const EvalReport dev = evaluate(model, task.dev, config.threads);
    EpochRecord record = record_for(epoch, epoch_loss, dev);
    if (config.record_wall_time) {
      record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
                           .count();
    }
    result.history.push_back(record);
    if (dev.f1 > best_f1) {
      best_f1 = dev.f1;
      best_values = model.params().values();
      result.selected_epoch = epoch;
    }
    if (!config.checkpoint_dir.empty()) {
      if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
        model.save(config.checkpoint_dir / ("epoch_" + std::to_string(epoch) + ".model"));
      }
      write_file_atomic(config.checkpoint_dir / "history.jsonl", history_jsonl(result.history));
    }
    if (on_epoch) on_epoch(record);
  }
  if (config.final_epoch) {
    result.selected_epoch = config.epochs;
  } else {
    model.params().values() = best_values;
  }
  result.selected_dev_f1 = result.history[static_cast<std::size_t>(result.selected_epoch - 1)].dev_f1;
  return result;
}

LogLinearTrainOutcome train_loglinear(const TransferTask& task, const TrainConfig& config, const TagSet& tagset) {
  task.validate(tagset);
  Corpus train = task.target;
  const bool conjoin = !task.sources.empty() && task.mu > 0.0;
  if (conjoin) {
    for (const auto& src : task.sources) train.insert(train.end(), src.corpus.begin(), src.corpus.end());
  }
  LogLinearTrainOutcome out;
  out.model = LogLinearModel(tagset, FeatureTemplateSet::standard(), conjoin);
  out.model.build_index(train);
  out.model.set_default_language(task.target_language);
  const auto started = std::chrono::steady_clock::now();
  auto trained = train_lbfgs(out.model, train, config.loglinear);
  out.optimizer = std::move(trained.optimizer);
  const EvalReport dev = evaluate(out.model, task.dev, config.threads);
  EpochRecord record = record_for(1, out.optimizer.value, dev);
  if (config.record_wall_time) {
    record.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  }
  out.history.push_back(record);
  if (!config.checkpoint_dir.empty()) {
    std::filesystem::create_directories(config.checkpoint_dir);
    write_file_atomic(config.checkpoint_dir / "history.jsonl", history_jsonl(out.history));
  }
  return out;
}

}  // namespace xlner
