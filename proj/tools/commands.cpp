#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "xlner/error.hpp"
#include "xlner/eval.hpp"
#include "xlner/gradcheck.hpp"
#include "xlner/io.hpp"
#include "xlner/loglinear.hpp"
#include "xlner/neural.hpp"
#include "xlner/synthetic.hpp"

namespace xlner::cli {

namespace fs = std::filesystem;

namespace {

// Flags shared by the experiment commands; unset flags leave the config
// file's value alone.
struct Overrides {
  std::string config_path;
  std::optional<std::string> manifest;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> mu;
  std::optional<int> epochs;
  std::optional<std::string> model_kind;
  std::optional<std::string> out;
  std::vector<std::string> set;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "flat key=value config file");
    app->add_option("--manifest", manifest, "corpus manifest (path<TAB>language<TAB>role)");
    app->add_option("--seed", seed, "seed for every random choice");
    app->add_option("--threads", threads, "worker threads (1 is bit-reproducible)")->check(CLI::PositiveNumber);
    app->add_option("--mu", mu, "weight of the source-language objective");
    app->add_option("--epochs", epochs, "training epochs")->check(CLI::PositiveNumber);
    app->add_option("--model-kind", model_kind, "loglinear | neural-mono | neural-xling");
    app->add_option("--out", out, "output directory");
    app->add_option("--set", set, "extra key=value config overrides");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    for (const auto& kv : set) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) fail(ErrorKind::kUsage, "--set expects key=value, got '" + kv + "'");
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (manifest) c.manifest = *manifest;
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (mu) {
      if (!(*mu >= 0.0)) fail(ErrorKind::kUsage, "mu must be non-negative");
      c.mu = *mu;
    }
    if (epochs) c.epochs = *epochs;
    if (model_kind) c.model_kind = parse_model_kind(*model_kind);
    if (out) c.out = *out;
    return c;
  }
};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round2(v));
  return buf;
}

Corpus load_corpus(const ManifestEntry& entry, const std::string& language, const TagSet& tagset) {
  auto parsed = parse_conll(read_file(entry.path), language, tagset);
  if (parsed.repair_count > 0) {
    std::cerr << entry.path.string() << ": repaired " << parsed.repair_count << " invalid I- tags\n";
  }
  return std::move(parsed.sentences);
}

NeuralModel build_neural(const ExperimentConfig& config, const ExperimentData& data) {
  std::vector<std::string> languages = {data.target_language};
  std::vector<const Corpus*> vocab = {&data.target.train};
  for (const auto& src : data.sources) {
    languages.push_back(src.language);
    vocab.push_back(&src.corpus);
  }
  return NeuralModel::create(config.neural_config(), data.tagset, languages, vocab);
}

TransferTask make_task(const ExperimentConfig& config, const ExperimentData& data) {
  TransferTask task;
  task.target_language = data.target_language;
  task.target = data.target.train;
  task.sources = data.sources;
  task.mu = config.mu;
  task.dev = data.target.dev;
  return task;
}

enum class ModelFile { kLogLinear, kNeural };

ModelFile sniff(const std::string& bytes) {
  if (bytes.rfind("XLNRLL01", 0) == 0) return ModelFile::kLogLinear;
  if (bytes.rfind("XLNRNN01", 0) == 0) return ModelFile::kNeural;
  fail(ErrorKind::kData, "not a model file (unknown header)");
}

int cmd_train(const Overrides& o) {
  const ExperimentConfig config = o.resolve();
  const auto summary = train_experiment(config);
  std::cout << "selected epoch " << summary.selected_epoch << "  dev F1 " << format_number(summary.dev_f1)
            << "  test F1 " << format_number(summary.test_f1) << "\n";
  return 0;
}

int cmd_tag(const std::string& model_path, const std::string& input, const std::string& output,
            const std::optional<std::string>& language) {
  const std::string bytes = read_file(model_path);
  const std::string text = read_file(input);
  std::string result;
  if (sniff(bytes) == ModelFile::kLogLinear) {
    const auto model = LogLinearModel::deserialize(bytes);
    const auto sentences = parse_tokens(text, language.value_or(model.default_language()));
    std::vector<std::vector<TagId>> tags;
    for (const auto& s : sentences) tags.push_back(model.predict(s));
    result = serialize_conll(sentences, tags, model.tagset());
  } else {
    const auto model = NeuralModel::deserialize(bytes);
    const auto sentences = parse_tokens(text, language.value_or(model.default_language()));
    std::vector<std::vector<TagId>> tags;
    for (const auto& s : sentences) tags.push_back(model.predict(s));
    result = serialize_conll(sentences, tags, model.tagset());
  }
  write_file_atomic(output, result);
  return 0;
}

int cmd_eval(const std::string& gold_path, const std::string& pred_path, const std::optional<std::string>& json_path,
             const std::vector<std::string>& entity_types) {
  const TagSet tagset(entity_types);
  const Corpus gold = parse_conll(read_file(gold_path), "", tagset).sentences;
  const Corpus pred = parse_conll(read_file(pred_path), "", tagset).sentences;
  if (gold.size() != pred.size()) {
    fail(ErrorKind::kData, "gold has " + std::to_string(gold.size()) + " sentences, predictions have " +
                               std::to_string(pred.size()));
  }
  std::vector<std::vector<TagId>> tags;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].sentence.tokens != pred[s].sentence.tokens) {
      fail(ErrorKind::kData, "sentence " + std::to_string(s + 1) + " differs between gold and predictions");
    }
    tags.push_back(pred[s].tags);
  }
  const auto report = entity_f1(gold, tags, tagset);
  std::cout << format_report(report);
  if (json_path) write_file_atomic(*json_path, report_json(report));
  return 0;
}

// A tiny two-language labeled batch when no manifest is configured.
Corpus gradcheck_batch(const ExperimentConfig& config, const TagSet& tagset, std::vector<std::string>& languages) {
  if (!config.manifest.empty()) {
    const auto data = load_experiment_data(config);
    languages = {data.target_language};
    Corpus batch = {data.target.train.front()};
    for (const auto& src : data.sources) {
      languages.push_back(src.language);
      batch.push_back(src.corpus.front());
    }
    return batch;
  }
  languages = {"qa", "qb"};
  Corpus batch = generate_synthetic(synthetic_language(0), 1, config.seed, tagset);
  const Corpus other = generate_synthetic(synthetic_language(1), 1, config.seed + 1, tagset);
  batch.push_back(other.front());
  return batch;
}

int cmd_gradcheck(const Overrides& o, const std::string& fault_group, double epsilon, int coordinates) {
  ExperimentConfig config = o.resolve();
  std::vector<ScorerKind> kinds;
  if (o.model_kind || !o.config_path.empty()) {
    if (config.model_kind == ModelKind::kLogLinear) {
      fail(ErrorKind::kUsage, "gradcheck needs a neural model kind (neural-mono or neural-xling)");
    }
    kinds.push_back(config.model_kind == ModelKind::kNeuralXling ? ScorerKind::kXling : ScorerKind::kMono);
  } else {
    kinds = {ScorerKind::kMono, ScorerKind::kXling};
  }
  const TagSet tagset(config.entity_types);
  std::vector<std::string> languages;
  const Corpus batch_data = gradcheck_batch(config, tagset, languages);
  std::vector<WeightedSentence> batch;
  for (const auto& ls : batch_data) batch.push_back({&ls, 1.0});

  double worst = 0.0;
  for (ScorerKind kind : kinds) {
    NeuralConfig nc = config.neural_config();
    nc.scorer = kind;
    nc.word_min_count = 1;
    auto model = NeuralModel::create(nc, tagset, languages, {&batch_data});
    GradCheckConfig gc;
    gc.epsilon = epsilon;
    gc.coordinates_per_group = coordinates;
    gc.seed = config.seed;
    gc.corrupt_group = fault_group;
    const auto report = grad_check(model, batch, gc);
    std::cout << (kind == ScorerKind::kMono ? "neural-mono" : "neural-xling") << "\n" << format_grad_check(report);
    worst = std::max(worst, report.max_rel_err);
  }
  constexpr double kThreshold = 1e-4;
  const bool ok = worst <= kThreshold;
  std::cout << (ok ? "PASS" : "FAIL") << " max_rel_err " << worst << " (threshold " << kThreshold << ")\n";
  return ok ? 0 : static_cast<int>(ErrorKind::kCheck);
}

std::vector<double> parse_mu_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || end != item.data() + item.size()) {
      fail(ErrorKind::kUsage, "bad mu value '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

int cmd_sweep_mu(const Overrides& o, const std::string& value_list) {
  const ExperimentConfig base = o.resolve();
  const auto values = parse_mu_list(value_list);
  if (values.empty()) fail(ErrorKind::kUsage, "sweep-mu needs at least one mu value");
  if (base.model_kind != ModelKind::kNeuralXling) fail(ErrorKind::kUsage, "sweep-mu needs model_kind neural-xling");
  struct Row {
    double mu;
    TrainSummary summary;
  };
  std::vector<Row> rows;
  for (double mu : values) {
    ExperimentConfig c = base;
    if (!(mu >= 0.0)) fail(ErrorKind::kUsage, "mu values must be non-negative");
    c.mu = mu;
    std::ostringstream dir;
    dir << "mu_" << mu;
    c.out = base.out / dir.str();
    rows.push_back({mu, train_experiment(c)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.summary.dev_f1 > b.summary.dev_f1; });
  std::string table = "mu\tdev_f1\ttest_f1\tepoch\n";
  for (const auto& r : rows) {
    std::ostringstream line;
    line << r.mu << "\t" << format_number(r.summary.dev_f1) << "\t" << format_number(r.summary.test_f1) << "\t"
         << r.summary.selected_epoch << "\n";
    table += line.str();
  }
  fs::create_directories(base.out);
  write_file_atomic(base.out / "sweep_mu.tsv", table);
  std::cout << table;
  return 0;
}

int cmd_synth(const std::string& out, std::uint64_t seed, std::size_t target, std::size_t source) {
  const TagSet tagset;
  fs::create_directories(out);
  const auto a = synthetic_language(0);
  const auto b = synthetic_language(1);
  write_file_atomic(fs::path(out) / (a.code + ".conll"),
                    serialize_conll(generate_synthetic(a, target, derive_seed(seed, 1), tagset), tagset));
  write_file_atomic(fs::path(out) / (b.code + ".conll"),
                    serialize_conll(generate_synthetic(b, source, derive_seed(seed, 2), tagset), tagset));
  write_file_atomic(fs::path(out) / "manifest.tsv",
                    a.code + ".conll\t" + a.code + "\ttarget\n" + b.code + ".conll\t" + b.code + "\tsource\n");
  return 0;
}

// Rows of `target<TAB>source<TAB>baseline<TAB>system`; "-" for no source.
int cmd_delta(const std::string& input, const std::optional<std::string>& jsonl) {
  std::vector<DeltaRow> rows;
  std::istringstream in(read_file(input));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream cols(line);
    DeltaRow row;
    std::string source;
    if (!(cols >> row.target >> source >> row.baseline_f1 >> row.system_f1)) {
      fail(ErrorKind::kData, "delta input line " + std::to_string(line_no) + ": expected target source baseline system");
    }
    if (source != "-") row.source = source;
    rows.push_back(row);
  }
  std::cout << delta_table(rows);
  if (jsonl) write_file_atomic(*jsonl, delta_table_jsonl(rows));
  return 0;
}

}  // namespace

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  if (config.manifest.empty()) fail(ErrorKind::kUsage, "no manifest configured (--manifest or manifest = ...)");
  if (!fs::exists(config.manifest)) fail(ErrorKind::kUsage, "manifest not found: " + config.manifest.string());
  const auto registry = LanguageRegistry::builtin();
  const auto entries = load_manifest(config.manifest);
  ExperimentData data;
  data.tagset = TagSet(config.entity_types);
  Corpus target;
  std::vector<std::string> source_order;
  std::map<std::string, Corpus> sources;
  for (const auto& e : entries) {
    const std::string lang = registry.resolve(e.language);
    Corpus corpus = load_corpus(e, lang, data.tagset);
    if (e.role == CorpusRole::kTarget) {
      if (!data.target_language.empty() && data.target_language != lang) {
        fail(ErrorKind::kUsage, "manifest lists more than one target language");
      }
      data.target_language = lang;
      target.insert(target.end(), corpus.begin(), corpus.end());
    } else {
      if (!sources.count(lang)) source_order.push_back(lang);
      auto& dst = sources[lang];
      dst.insert(dst.end(), corpus.begin(), corpus.end());
    }
  }
  if (data.target_language.empty()) fail(ErrorKind::kUsage, "manifest has no target corpus");
  data.target = make_splits(target, config.split_spec());
  for (std::size_t i = 0; i < source_order.size(); ++i) {
    const auto& lang = source_order[i];
    if (lang == data.target_language) fail(ErrorKind::kUsage, "source language equals the target language");
    Corpus& corpus = sources[lang];
    const std::size_t keep = config.source_size == 0 ? corpus.size() : std::min(config.source_size, corpus.size());
    data.sources.push_back({lang, sample_sentences(corpus, keep, derive_seed(config.seed, 0x5352 + i))});
  }
  return data;
}

TrainSummary train_experiment(const ExperimentConfig& config) {
  const ExperimentData data = load_experiment_data(config);
  fs::create_directories(config.out);
  write_file_atomic(config.out / "config.resolved", config.to_text());
  TrainConfig tc = config.train_config();
  tc.checkpoint_dir = config.out;
  const TransferTask task = make_task(config, data);

  TrainSummary summary;
  EvalReport dev;
  EvalReport test;
  if (config.model_kind == ModelKind::kLogLinear) {
    auto outcome = train_loglinear(task, tc, data.tagset);
    outcome.model.save(config.out / "best.model");
    dev = evaluate(outcome.model, data.target.dev, config.threads);
    test = evaluate(outcome.model, data.target.test, config.threads);
    summary.selected_epoch = 1;
  } else {
    const NeuralModel initial = build_neural(config, data);
    auto result = train_neural(initial, task, tc, [](const EpochRecord& r) {
      std::cerr << "epoch " << r.epoch << "  loss " << r.train_loss << "  dev F1 " << format_number(r.dev_f1)
                << "\n";
    });
    result.model.save(config.out / "best.model");
    dev = evaluate(result.model, data.target.dev, config.threads);
    test = evaluate(result.model, data.target.test, config.threads);
    summary.selected_epoch = result.selected_epoch;
  }
  summary.dev_f1 = dev.f1;
  summary.test_f1 = test.f1;
  nlohmann::ordered_json j;
  j["model_kind"] = model_kind_name(config.model_kind);
  j["selected_epoch"] = summary.selected_epoch;
  j["dev"] = nlohmann::ordered_json::parse(report_json(dev));
  j["test"] = nlohmann::ordered_json::parse(report_json(test));
  write_file_atomic(config.out / "report.json", j.dump(2) + "\n");
  return summary;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Linear-chain CRF taggers with cross-lingual transfer"};
  app.require_subcommand(1);

  Overrides train_o;
  auto* train = app.add_subcommand("train", "train a model from a manifest and config");
  train_o.attach(train);

  std::string tag_model, tag_input, tag_output;
  std::optional<std::string> tag_language;
  auto* tag = app.add_subcommand("tag", "tag tokenized text with a trained model");
  tag->add_option("--model", tag_model, "model file")->required();
  tag->add_option("--input", tag_input, "one token per line, blank line between sentences")->required();
  tag->add_option("--output", tag_output, "CoNLL output path")->required();
  tag->add_option("--language", tag_language, "language of the input (default: model's target)");

  std::string eval_gold, eval_pred;
  std::optional<std::string> eval_json;
  std::vector<std::string> eval_types = {"per", "loc", "org", "misc"};
  auto* eval = app.add_subcommand("eval", "entity-level P/R/F1 of predictions against gold");
  eval->add_option("--gold", eval_gold, "gold CoNLL file")->required();
  eval->add_option("--pred", eval_pred, "predicted CoNLL file")->required();
  eval->add_option("--json", eval_json, "also write the report as JSON");
  eval->add_option("--entity-types", eval_types, "entity types")->delimiter(',');

  Overrides grad_o;
  std::string fault_group;
  double grad_eps = 1e-4;
  int grad_coords = 30;
  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  grad_o.attach(gradcheck);
  gradcheck->add_option("--inject-fault", fault_group, "corrupt the analytic gradient of this parameter group");
  gradcheck->add_option("--epsilon", grad_eps, "central-difference step");
  gradcheck->add_option("--coordinates", grad_coords, "sampled coordinates per group")->check(CLI::PositiveNumber);

  Overrides sweep_o;
  std::string sweep_values;
  auto* sweep = app.add_subcommand("sweep-mu", "train once per mu and rank by dev F1");
  sweep_o.attach(sweep);
  sweep->add_option("--values", sweep_values, "comma-separated mu values, e.g. 0,0.5,1");

  std::string synth_out;
  std::uint64_t synth_seed = 1;
  std::size_t synth_target = 2100, synth_source = 10000;
  auto* synth = app.add_subcommand("synth", "write a synthetic two-language transfer corpus and manifest");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--target-sentences", synth_target, "sentences in the target language");
  synth->add_option("--source-sentences", synth_source, "sentences in the source language");

  std::string delta_input;
  std::optional<std::string> delta_jsonl;
  auto* delta = app.add_subcommand("delta", "render baseline/system F1 pairs as a delta table");
  delta->add_option("--input", delta_input, "rows: target source baseline system ('-' for no source)")->required();
  delta->add_option("--jsonl", delta_jsonl, "also write one JSON record per row");

  try {
    std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::kUsage);
  }

  try {
    if (*train) return cmd_train(train_o);
    if (*tag) return cmd_tag(tag_model, tag_input, tag_output, tag_language);
    if (*eval) return cmd_eval(eval_gold, eval_pred, eval_json, eval_types);
    if (*gradcheck) return cmd_gradcheck(grad_o, fault_group, grad_eps, grad_coords);
    if (*sweep) return cmd_sweep_mu(sweep_o, sweep_values);
    if (*synth) return cmd_synth(synth_out, synth_seed, synth_target, synth_source);
    if (*delta) return cmd_delta(delta_input, delta_jsonl);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kUsage);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kData);
  }
  return static_cast<int>(ErrorKind::kUsage);
}

}  // namespace xlner::cli
