#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "xlner/corpus.hpp"
#include "xlner/error.hpp"
#include "xlner/training.hpp"

using namespace xlner;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("xlner_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// qa and qb hold the same sentences; the qb word table and language
// embedding are copied from qa so the two languages are interchangeable.
struct Symmetric {
  Corpus qa = fixture::synthetic(0, 8, 21);
  Corpus qb = fixture::relabel(qa, "qb");
  NeuralModel model = fixture::model(ScorerKind::kXling, {&qa, &qb}, {"qa", "qb"}, true);
  Symmetric() {
    auto& store = model.params();
    store.map(store.find("word_table.qb")) = store.map(store.find("word_table.qa"));
    auto l = store.map(store.find("lang_embedding"));
    l.col(1) = l.col(0);
  }
};

TrainConfig quick_config(int epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 4;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("joint loss reductions") {
  Symmetric s;
  const double mono = s.model.loss(fixture::batch(s.qa));
  CHECK(joint_loss(s.model, s.qa, {}, 1.0, nullptr) == mono);
  CHECK(joint_loss(s.model, s.qa, {&s.qb}, 0.0, nullptr) == mono);
  RealBuffer g0, g1;
  joint_loss(s.model, s.qa, {}, 1.0, &g0);
  joint_loss(s.model, s.qa, {&s.qb}, 0.0, &g1);
  CHECK(g0 == g1);
  const double both = joint_loss(s.model, s.qa, {&s.qb}, 1.0, nullptr);
  CHECK(std::abs(both - 2 * mono) <= 1e-12 * both);
  CHECK_THROWS_AS(joint_loss(s.model, s.qa, {&s.qb}, -0.5, nullptr), Error);
}

TEST_CASE("adding a source summand leaves the target summand unchanged") {
  Symmetric s;
  const Corpus src = fixture::synthetic(1, 5, 3);
  auto m = fixture::model(ScorerKind::kXling, {&s.qa, &src}, {"qa", "qb"});
  const double target = m.loss(fixture::batch(s.qa));
  const double source = m.loss(fixture::batch(src));
  for (double mu : {0.25, 1.0, 3.0}) {
    const double joint = joint_loss(m, s.qa, {&src}, mu, nullptr);
    CHECK(std::abs(joint - (target + mu * source)) <= 1e-12 * joint);
    CHECK(m.loss(fixture::batch(s.qa)) == target);
  }
}

TEST_CASE("source language embedding gradient flows only through the source summand") {
  const Corpus qa = fixture::synthetic(0, 3, 2);
  const Corpus qb = fixture::synthetic(1, 3, 2);
  auto m = fixture::model(ScorerKind::kXling, {&qa, &qb}, {"qa", "qb"});
  auto& store = m.params();
  const auto& info = store.info(store.find("lang_embedding"));
  const std::size_t col1 = info.offset + static_cast<std::size_t>(info.rows);
  RealBuffer grad;
  joint_loss(m, qa, {}, 1.0, &grad);
  for (int r = 0; r < info.rows; ++r) CHECK(grad[col1 + static_cast<std::size_t>(r)] == 0.0);
  joint_loss(m, qa, {&qb}, 0.0, &grad);
  for (int r = 0; r < info.rows; ++r) CHECK(grad[col1 + static_cast<std::size_t>(r)] == 0.0);

  const double mu = 0.6;
  joint_loss(m, qa, {&qb}, mu, &grad);
  double total = 0.0;
  for (int r = 0; r < info.rows; ++r) {
    const std::size_t j = col1 + static_cast<std::size_t>(r);
    const Real saved = store.values()[j];
    const double h = 1e-5;
    store.values()[j] = saved + h;
    const double up = joint_loss(m, qa, {&qb}, mu, nullptr);
    store.values()[j] = saved - h;
    const double down = joint_loss(m, qa, {&qb}, mu, nullptr);
    store.values()[j] = saved;
    const double numeric = (up - down) / (2 * h);
    CHECK(std::abs(numeric - grad[j]) <= 1e-6 * std::max(1.0, std::abs(numeric)));
    total += std::abs(grad[j]);
  }
  CHECK(total > 0.0);
}

TEST_CASE("task validation") {
  TagSet ts;
  TransferTask task;
  task.target_language = "qa";
  task.target = fixture::synthetic(0, 4, 1);
  task.dev = fixture::synthetic(0, 4, 2);
  CHECK_NOTHROW(task.validate(ts));
  task.mu = -1;
  CHECK_THROWS_AS(task.validate(ts), Error);
  task.mu = 1;
  task.dev.clear();
  CHECK_THROWS_AS(task.validate(ts), Error);
  task.dev = fixture::synthetic(1, 4, 2);
  CHECK_THROWS_AS(task.validate(ts), Error);
}

TEST_CASE("neural training is deterministic and mu = 0 ignores sources") {
  const Corpus qa = fixture::synthetic(0, 16, 7);
  const Corpus qb = fixture::synthetic(1, 16, 7);
  const auto initial = fixture::model(ScorerKind::kXling, {&qa, &qb}, {"qa", "qb"}, true);
  TransferTask task;
  task.target_language = "qa";
  task.target = qa;
  task.dev = fixture::synthetic(0, 10, 8);
  task.mu = 0.0;
  const auto detached = train_neural(initial, task, quick_config(3));
  task.sources = {{"qb", qb}};
  const auto attached = train_neural(initial, task, quick_config(3));
  const auto repeat = train_neural(initial, task, quick_config(3));
  CHECK(history_jsonl(detached.history) == history_jsonl(attached.history));
  CHECK(history_jsonl(attached.history) == history_jsonl(repeat.history));
  CHECK(attached.model.params().values() == repeat.model.params().values());
  REQUIRE(attached.history.size() == 3);
  for (const auto& r : attached.history) CHECK(std::isfinite(r.train_loss));

  task.mu = 1.0;
  const auto transfer = train_neural(initial, task, quick_config(3));
  CHECK(history_jsonl(transfer.history) != history_jsonl(attached.history));
}

TEST_CASE("checkpoints, history file and selection") {
  TempDir dir("ckpt");
  const Corpus qa = fixture::synthetic(0, 12, 3);
  const auto initial = fixture::model(ScorerKind::kMono, {&qa}, {"qa"});
  TransferTask task;
  task.target_language = "qa";
  task.target = qa;
  task.dev = fixture::synthetic(0, 10, 4);
  auto cfg = quick_config(4);
  cfg.checkpoint_dir = dir.path;
  const auto r = train_neural(initial, task, cfg);
  for (int e = 1; e <= 4; ++e) CHECK(fs::exists(dir.path / ("epoch_" + std::to_string(e) + ".model")));
  CHECK(read_file(dir.path / "history.jsonl") == history_jsonl(r.history));

  int best = 0;
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    if (r.history[i].dev_f1 > r.history[static_cast<std::size_t>(best)].dev_f1) best = static_cast<int>(i);
  }
  CHECK(r.selected_epoch == best + 1);
  const auto reloaded = NeuralModel::deserialize(r.model.serialize());
  CHECK(evaluate(reloaded, task.dev).f1 == r.selected_dev_f1);
  CHECK(NeuralModel::load(dir.path / ("epoch_" + std::to_string(best + 1) + ".model")).params().values() ==
        r.model.params().values());

  cfg.checkpoint_dir.clear();
  cfg.final_epoch = true;
  CHECK(train_neural(initial, task, cfg).selected_epoch == 4);
}

TEST_CASE("a separable task is learned") {
  const Corpus train = fixture::word_identity_corpus(200, 1, "qa");
  TransferTask task;
  task.target_language = "qa";
  task.target = train;
  task.dev = fixture::word_identity_corpus(100, 2, "qa");
  auto dims = fixture::small_dims();
  dims.lstm_layers = 1;
  dims.lstm_hidden = 8;
  dims.r2 = 8;
  dims.r1 = 8;
  const auto initial = fixture::model(ScorerKind::kMono, {&train}, {"qa"}, false, dims);
  auto cfg = quick_config(100);
  cfg.batch_size = 16;
  const auto r = train_neural(initial, task, cfg);
  CHECK(r.selected_dev_f1 >= 95.0);
}

TEST_CASE("log-linear transfer baseline") {
  TagSet ts;
  TransferTask task;
  task.target_language = "qa";
  task.target = fixture::synthetic(0, 20, 1);
  task.dev = fixture::synthetic(0, 10, 2);
  task.sources = {{"qb", fixture::synthetic(1, 20, 3)}};
  auto cfg = quick_config(1);
  cfg.loglinear.lbfgs.max_iter = 30;
  task.mu = 0.0;
  const auto mono = train_loglinear(task, cfg, ts);
  CHECK_FALSE(mono.model.conjoin());
  REQUIRE(mono.history.size() == 1);
  CHECK(mono.history[0].dev_f1 == evaluate(mono.model, task.dev).f1);
  task.mu = 1.0;
  const auto joint = train_loglinear(task, cfg, ts);
  CHECK(joint.model.conjoin());
  CHECK(joint.model.knows_language("qb"));
  CHECK(joint.model.default_language() == "qa");
}
