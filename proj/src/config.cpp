#include "xlner/config.hpp"

#include <charconv>
#include <sstream>

#include "xlner/corpus.hpp"
#include "xlner/error.hpp"

namespace xlner {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorKind::kUsage, "invalid value '" + std::string(value) + "' for config key '" + std::string(key) + "'");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

int positive(std::string_view key, std::string_view value) {
  const int v = parse_number<int>(key, value);
  if (v < 1) bad_value(key, value);
  return v;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLogLinear:
      return "loglinear";
    case ModelKind::kNeuralMono:
      return "neural-mono";
    case ModelKind::kNeuralXling:
      return "neural-xling";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "loglinear") return ModelKind::kLogLinear;
  if (name == "neural-mono") return ModelKind::kNeuralMono;
  if (name == "neural-xling") return ModelKind::kNeuralXling;
  fail(ErrorKind::kUsage, "unknown model kind '" + std::string(name) + "' (loglinear, neural-mono, neural-xling)");
}

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = {
      "manifest", "model_kind", "out", "seed", "threads", "train_size", "dev_size", "test_size", "source_size", "mu",
      "epochs", "batch_size", "checkpoint_every", "final_epoch", "record_wall_time", "rho", "adadelta_epsilon",
      "learning_rate", "l2", "lbfgs_memory", "lbfgs_tol", "lbfgs_max_iter", "r1", "r2", "r3", "q", "d_char",
      "d_char_input", "d_word", "lstm_layers", "lstm_hidden", "tag_dependent_emission", "word_min_count",
      "entity_types"};
  return k;
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "manifest") manifest = std::string(value);
  else if (key == "model_kind") model_kind = parse_model_kind(value);
  else if (key == "out") out = std::string(value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threads") threads = positive(key, value);
  else if (key == "train_size") train_size = static_cast<std::size_t>(positive(key, value));
  else if (key == "dev_size") dev_size = static_cast<std::size_t>(positive(key, value));
  else if (key == "test_size") test_size = static_cast<std::size_t>(positive(key, value));
  else if (key == "source_size") source_size = parse_number<std::size_t>(key, value);
  else if (key == "mu") {
    mu = parse_number<double>(key, value);
    if (!(mu >= 0.0)) bad_value(key, value);
  }
  else if (key == "epochs") epochs = positive(key, value);
  else if (key == "batch_size") batch_size = positive(key, value);
  else if (key == "checkpoint_every") checkpoint_every = parse_number<int>(key, value);
  else if (key == "final_epoch") final_epoch = parse_bool(key, value);
  else if (key == "record_wall_time") record_wall_time = parse_bool(key, value);
  else if (key == "rho") rho = parse_number<double>(key, value);
  else if (key == "adadelta_epsilon") adadelta_epsilon = parse_number<double>(key, value);
  else if (key == "learning_rate") learning_rate = parse_number<double>(key, value);
  else if (key == "l2") l2 = parse_number<double>(key, value);
  else if (key == "lbfgs_memory") lbfgs_memory = positive(key, value);
  else if (key == "lbfgs_tol") lbfgs_tol = parse_number<double>(key, value);
  else if (key == "lbfgs_max_iter") lbfgs_max_iter = positive(key, value);
  else if (key == "r1") dims.r1 = positive(key, value);
  else if (key == "r2") dims.r2 = positive(key, value);
  else if (key == "r3") dims.r3 = positive(key, value);
  else if (key == "q") dims.q = positive(key, value);
  else if (key == "d_char") dims.d_char = positive(key, value);
  else if (key == "d_char_input") dims.d_char_input = positive(key, value);
  else if (key == "d_word") dims.d_word = positive(key, value);
  else if (key == "lstm_layers") dims.lstm_layers = positive(key, value);
  else if (key == "lstm_hidden") dims.lstm_hidden = positive(key, value);
  else if (key == "tag_dependent_emission") tag_dependent_emission = parse_bool(key, value);
  else if (key == "word_min_count") word_min_count = positive(key, value);
  else if (key == "entity_types") {
    entity_types.clear();
    std::string_view rest = value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      if (item.empty()) bad_value(key, value);
      entity_types.emplace_back(item);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (entity_types.empty()) bad_value(key, value);
  } else {
    fail(ErrorKind::kUsage, "unknown config key '" + std::string(key) + "'");
  }
}

std::string ExperimentConfig::to_text() const {
  std::string types;
  for (std::size_t i = 0; i < entity_types.size(); ++i) types += (i ? "," : "") + entity_types[i];
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"manifest", manifest.string()},
      {"model_kind", model_kind_name(model_kind)},
      {"out", out.string()},
      {"seed", std::to_string(seed)},
      {"threads", std::to_string(threads)},
      {"train_size", std::to_string(train_size)},
      {"dev_size", std::to_string(dev_size)},
      {"test_size", std::to_string(test_size)},
      {"source_size", std::to_string(source_size)},
      {"mu", fmt(mu)},
      {"epochs", std::to_string(epochs)},
      {"batch_size", std::to_string(batch_size)},
      {"checkpoint_every", std::to_string(checkpoint_every)},
      {"final_epoch", b(final_epoch)},
      {"record_wall_time", b(record_wall_time)},
      {"rho", fmt(rho)},
      {"adadelta_epsilon", fmt(adadelta_epsilon)},
      {"learning_rate", fmt(learning_rate)},
      {"l2", fmt(l2)},
      {"lbfgs_memory", std::to_string(lbfgs_memory)},
      {"lbfgs_tol", fmt(lbfgs_tol)},
      {"lbfgs_max_iter", std::to_string(lbfgs_max_iter)},
      {"r1", std::to_string(dims.r1)},
      {"r2", std::to_string(dims.r2)},
      {"r3", std::to_string(dims.r3)},
      {"q", std::to_string(dims.q)},
      {"d_char", std::to_string(dims.d_char)},
      {"d_char_input", std::to_string(dims.d_char_input)},
      {"d_word", std::to_string(dims.d_word)},
      {"lstm_layers", std::to_string(dims.lstm_layers)},
      {"lstm_hidden", std::to_string(dims.lstm_hidden)},
      {"tag_dependent_emission", b(tag_dependent_emission)},
      {"word_min_count", std::to_string(word_min_count)},
      {"entity_types", types},
  };
  std::string out_text;
  for (const auto& [k, v] : rows) out_text += k + " = " + v + "\n";
  return out_text;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = batch_size;
  c.seed = seed;
  c.adadelta.rho = rho;
  c.adadelta.epsilon = adadelta_epsilon;
  c.adadelta.learning_rate = learning_rate;
  c.loglinear.l2 = l2;
  c.loglinear.threads = threads;
  c.loglinear.lbfgs.memory = lbfgs_memory;
  c.loglinear.lbfgs.tol = lbfgs_tol;
  c.loglinear.lbfgs.max_iter = lbfgs_max_iter;
  c.threads = threads;
  c.checkpoint_every = checkpoint_every;
  c.final_epoch = final_epoch;
  c.record_wall_time = record_wall_time;
  return c;
}

NeuralConfig ExperimentConfig::neural_config() const {
  NeuralConfig c;
  c.dims = dims;
  c.scorer = model_kind == ModelKind::kNeuralXling ? ScorerKind::kXling : ScorerKind::kMono;
  c.tag_dependent_emission = tag_dependent_emission;
  c.word_min_count = word_min_count;
  c.seed = seed;
  return c;
}

SplitSpec ExperimentConfig::split_spec() const { return SplitSpec{train_size, dev_size, test_size, seed}; }

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::kUsage, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::kUsage, "config file not found: " + path.string());
  auto config = parse_config(read_file(path));
  // A relative manifest is taken relative to the config file.
  if (!config.manifest.empty() && config.manifest.is_relative()) {
    config.manifest = path.parent_path() / config.manifest;
  }
  return config;
}

}  // namespace xlner
