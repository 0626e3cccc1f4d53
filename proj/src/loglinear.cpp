#include "xlner/loglinear.hpp"

#include <algorithm>
#include <cmath>

#include "xlner/error.hpp"
#include "xlner/io.hpp"

namespace xlner {

namespace {

constexpr char kMagic[] = "XLNRLL01";
constexpr std::uint32_t kVersion = 1;
constexpr int kUnigram = -1;

std::string attr_key(const std::string& attr, const std::string& language) {
  std::string key = attr;
  key += '\x1f';
  key += language;
  return key;
}

}  // namespace

std::string feature_string(const FeatureKey& key, const TagSet& tagset) {
  const std::string& tag = tagset.name(key.tag);
  if (key.prev == kUnigram) return unigram_feature(key.attr, tag, key.language);
  const std::string prev = key.prev == tagset.bos_index() ? std::string("BOS") : tagset.name(key.prev);
  return pair_feature(key.attr, prev, tag, key.language);
}

int FeatureIndex::add(const FeatureKey& key, const TagSet& tagset) {
  std::string name = feature_string(key, tagset);
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  if (frozen_) return -1;
  const int id = static_cast<int>(keys_.size());
  ids_.emplace(name, id);
  keys_.push_back(key);
  names_.push_back(std::move(name));
  return id;
}

int FeatureIndex::lookup(const std::string& feature) const {
  auto it = ids_.find(feature);
  return it == ids_.end() ? -1 : it->second;
}

LogLinearModel::LogLinearModel(TagSet tagset, FeatureTemplateSet templates, bool conjoin_language)
    : tagset_(std::move(tagset)), templates_(std::move(templates)), conjoin_(conjoin_language) {}

bool LogLinearModel::knows_language(const std::string& code) const {
  return std::find(languages_.begin(), languages_.end(), code) != languages_.end();
}

int LogLinearModel::attr_id(std::unordered_map<std::string, int>& dict, const std::string& attr,
                            const std::string& language, int width, std::vector<int>& table) {
  auto [it, inserted] = dict.emplace(attr_key(attr, language), static_cast<int>(dict.size()));
  if (inserted) table.resize(table.size() + static_cast<std::size_t>(width), -1);
  return it->second;
}

void LogLinearModel::register_key(const FeatureKey& key, int id) {
  const int k = tagset_.size();
  if (key.prev == kUnigram) {
    const int a = attr_id(unigram_attrs_, key.attr, key.language, k, unigram_table_);
    unigram_table_[static_cast<std::size_t>(a * k + key.tag)] = id;
  } else {
    const int a = attr_id(pair_attrs_, key.attr, key.language, (k + 1) * k, pair_table_);
    pair_table_[static_cast<std::size_t>(a * (k + 1) * k + key.prev * k + key.tag)] = id;
  }
}

void LogLinearModel::build_index(const Corpus& corpus) {
  if (index_.frozen()) fail(ErrorKind::kUsage, "feature index is already built");
  for (const auto& ls : corpus) {
    if (!knows_language(ls.sentence.language)) languages_.push_back(ls.sentence.language);
  }
  if (default_language_.empty() && !languages_.empty()) default_language_ = languages_.front();
  const int k = tagset_.size();
  auto add = [&](FeatureKey key) {
    const int before = index_.size();
    const int id = index_.add(key, tagset_);
    if (id == before) register_key(key, id);
  };
  auto add_both = [&](FeatureKey key, const std::string& language) {
    add(key);
    if (conjoin_) {
      key.language = language;
      add(std::move(key));
    }
  };
  const bool has_bigram = std::any_of(templates_.templates.begin(), templates_.templates.end(),
                                      [](const auto& t) { return t.kind == TemplateKind::kBigram; });
  if (has_bigram) {
    for (int p = 0; p <= k; ++p) {
      for (int t = 0; t < k; ++t) {
        add({"bigram", "", p, t});
        if (conjoin_) {
          for (const auto& lang : languages_) add({"bigram", lang, p, t});
        }
      }
    }
  }
  for (const auto& ls : corpus) {
    const auto& lang = ls.sentence.language;
    for (int i = 0; i < static_cast<int>(ls.size()); ++i) {
      const Observation obs = observe(ls.sentence, i, templates_);
      const TagId tag = ls.tags[static_cast<std::size_t>(i)];
      const int prev = i == 0 ? tagset_.bos_index() : ls.tags[static_cast<std::size_t>(i - 1)];
      for (const auto& a : obs.unigram) add_both({a, "", kUnigram, tag}, lang);
      for (const auto& a : obs.pair) add_both({a, "", prev, tag}, lang);
    }
  }
  index_.freeze();
  weights_.assign(static_cast<std::size_t>(index_.size()), 0.0);
}

CompiledSentence LogLinearModel::compile(const Sentence& sentence) const {
  if (conjoin_ && !knows_language(sentence.language)) {
    fail(ErrorKind::kData, "unknown language '" + sentence.language + "' for a language-conjoined model");
  }
  CompiledSentence cs;
  cs.length = static_cast<int>(sentence.size());
  cs.unigram.resize(sentence.size());
  cs.pair.resize(sentence.size());
  auto resolve = [&](const std::unordered_map<std::string, int>& dict, const std::string& attr,
                     std::vector<int>& out) {
    auto it = dict.find(attr_key(attr, ""));
    if (it != dict.end()) out.push_back(it->second);
    if (conjoin_) {
      it = dict.find(attr_key(attr, sentence.language));
      if (it != dict.end()) out.push_back(it->second);
    }
  };
  for (int i = 0; i < cs.length; ++i) {
    const Observation obs = observe(sentence, i, templates_);
    for (const auto& a : obs.unigram) resolve(unigram_attrs_, a, cs.unigram[static_cast<std::size_t>(i)]);
    for (const auto& a : obs.pair) resolve(pair_attrs_, a, cs.pair[static_cast<std::size_t>(i)]);
  }
  return cs;
}

LogLattice LogLinearModel::lattice(const CompiledSentence& cs) const {
  const int k = tagset_.size();
  const int width = (k + 1) * k;
  LogLattice lat(cs.length, k);
  std::vector<double> emit(static_cast<std::size_t>(k));
  auto w = [&](int id) { return id < 0 ? 0.0 : weights_[static_cast<std::size_t>(id)]; };
  for (int i = 0; i < cs.length; ++i) {
    std::fill(emit.begin(), emit.end(), 0.0);
    for (int a : cs.unigram[static_cast<std::size_t>(i)]) {
      const int* row = &unigram_table_[static_cast<std::size_t>(a * k)];
      for (int t = 0; t < k; ++t) emit[static_cast<std::size_t>(t)] += w(row[t]);
    }
    const auto& pairs = cs.pair[static_cast<std::size_t>(i)];
    if (i == 0) {
      for (int t = 0; t < k; ++t) {
        double s = emit[static_cast<std::size_t>(t)];
        for (int a : pairs) s += w(pair_table_[static_cast<std::size_t>(a * width + k * k + t)]);
        lat.start(t) = s;
      }
    } else {
      for (int p = 0; p < k; ++p) {
        for (int t = 0; t < k; ++t) {
          double s = emit[static_cast<std::size_t>(t)];
          for (int a : pairs) s += w(pair_table_[static_cast<std::size_t>(a * width + p * k + t)]);
          lat.at(i, p, t) = s;
        }
      }
    }
  }
  return lat;
}

void LogLinearModel::accumulate(const CompiledSentence& cs, const LogLattice& edge, double scale,
                                std::vector<double>& grad) const {
  const int k = tagset_.size();
  const int width = (k + 1) * k;
  std::vector<double> node(static_cast<std::size_t>(k));
  for (int i = 0; i < cs.length; ++i) {
    const auto& pairs = cs.pair[static_cast<std::size_t>(i)];
    std::fill(node.begin(), node.end(), 0.0);
    for (int p = 0; p < edge.num_prev(i); ++p) {
      const int prev = i == 0 ? k : p;
      for (int t = 0; t < k; ++t) {
        const double m = edge.at(i, p, t);
        if (m == 0.0) continue;
        node[static_cast<std::size_t>(t)] += m;
        for (int a : pairs) {
          const int id = pair_table_[static_cast<std::size_t>(a * width + prev * k + t)];
          if (id >= 0) grad[static_cast<std::size_t>(id)] += scale * m;
        }
      }
    }
    for (int a : cs.unigram[static_cast<std::size_t>(i)]) {
      const int* row = &unigram_table_[static_cast<std::size_t>(a * k)];
      for (int t = 0; t < k; ++t) {
        if (row[t] >= 0) grad[static_cast<std::size_t>(row[t])] += scale * node[static_cast<std::size_t>(t)];
      }
    }
  }
}

std::vector<TagId> LogLinearModel::predict(const Sentence& sentence) const {
  auto tags = viterbi(lattice(sentence)).tags;
  repair_bio(tags, tagset_);
  return tags;
}

double loglik_and_gradient(const LogLinearModel& model, const std::vector<CompiledSentence>& compiled,
                           const Corpus& batch, double l2, std::vector<double>& grad, int threads) {
  if (batch.empty()) fail(ErrorKind::kUsage, "empty batch");
  if (!model.index().frozen()) fail(ErrorKind::kUsage, "feature index must be frozen before training");
  const std::size_t dim = model.weights().size();
  const int chunks = std::max(1, threads);
  std::vector<std::vector<double>> partial_grad(static_cast<std::size_t>(chunks));
  std::vector<double> partial_ll(static_cast<std::size_t>(chunks), 0.0);
  parallel_chunks(batch.size(), chunks, [&](int c, std::size_t begin, std::size_t end) {
    auto& g = partial_grad[static_cast<std::size_t>(c)];
    g.assign(dim, 0.0);
    double ll = 0.0;
    for (std::size_t s = begin; s < end; ++s) {
      const auto& cs = compiled[s];
      const auto lat = model.lattice(cs);
      const auto post = posteriors(lat);
      const auto& tags = batch[s].tags;
      ll += sequence_score(lat, tags) - post.log_z;
      LogLattice gold(cs.length, lat.num_tags());
      gold.start(tags[0]) = 1.0;
      for (int i = 1; i < cs.length; ++i) {
        gold.at(i, tags[static_cast<std::size_t>(i - 1)], tags[static_cast<std::size_t>(i)]) = 1.0;
      }
      model.accumulate(cs, gold, 1.0, g);
      model.accumulate(cs, post.edge, -1.0, g);
    }
    partial_ll[static_cast<std::size_t>(c)] = ll;
  });
  grad.assign(dim, 0.0);
  double loglik = 0.0;
  for (std::size_t c = 0; c < partial_grad.size(); ++c) {
    if (partial_grad[c].empty()) continue;
    loglik += partial_ll[c];
    for (std::size_t j = 0; j < dim; ++j) grad[j] += partial_grad[c][j];
  }
  if (l2 != 0.0) {
    const auto& w = model.weights();
    double norm2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      norm2 += w[j] * w[j];
      grad[j] -= l2 * w[j];
    }
    loglik -= 0.5 * l2 * norm2;
  }
  return loglik;
}

double loglik_and_gradient(const LogLinearModel& model, const Corpus& batch, double l2, std::vector<double>& grad) {
  std::vector<CompiledSentence> compiled;
  compiled.reserve(batch.size());
  for (const auto& ls : batch) compiled.push_back(model.compile(ls.sentence));
  return loglik_and_gradient(model, compiled, batch, l2, grad, 1);
}

LogLinearTrainResult train_lbfgs(LogLinearModel& model, const Corpus& train, const LogLinearTrainConfig& config,
                                 const LbfgsCallback& callback) {
  if (train.empty()) fail(ErrorKind::kData, "empty training corpus");
  if (!model.index().frozen()) model.build_index(train);
  std::vector<CompiledSentence> compiled;
  compiled.reserve(train.size());
  for (const auto& ls : train) compiled.push_back(model.compile(ls.sentence));
  auto objective = [&](const std::vector<double>& x, std::vector<double>& grad) {
    model.weights() = x;
    const double ll = loglik_and_gradient(model, compiled, train, config.l2, grad, config.threads);
    for (double& g : grad) g = -g;
    return -ll;
  };
  LogLinearTrainResult result;
  result.optimizer = minimize_lbfgs(objective, model.weights(), config.lbfgs, callback);
  model.weights() = result.optimizer.x;
  for (double v : result.optimizer.trace) result.objective_trace.push_back(-v);
  return result;
}

std::string LogLinearModel::serialize() const {
  BinaryWriter w;
  w.magic(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(tagset_.entity_types().size()));
  for (const auto& t : tagset_.entity_types()) w.str(t);
  w.i32(templates_.window);
  w.i32(templates_.affix_max);
  w.u32(static_cast<std::uint32_t>(templates_.templates.size()));
  for (const auto& t : templates_.templates) {
    w.u8(static_cast<std::uint8_t>(t.kind));
    w.i32(t.param);
  }
  w.u8(conjoin_ ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(languages_.size()));
  for (const auto& l : languages_) w.str(l);
  w.str(default_language_);
  w.u32(static_cast<std::uint32_t>(index_.size()));
  for (int id = 0; id < index_.size(); ++id) {
    const auto& key = index_.key(id);
    w.str(key.attr);
    w.str(key.language);
    w.i32(key.prev);
    w.i32(key.tag);
    w.f64(weights_[static_cast<std::size_t>(id)]);
  }
  BinaryWriter out;
  out.magic(w.bytes());
  out.u64(checksum(w.bytes()));
  return out.bytes();
}

LogLinearModel LogLinearModel::deserialize(const std::string& bytes) {
  if (bytes.size() < 8) fail(ErrorKind::kData, "model file is truncated or corrupted");
  const std::string_view body(bytes.data(), bytes.size() - 8);
  BinaryReader tail(std::string_view(bytes).substr(bytes.size() - 8));
  if (tail.u64() != checksum(body)) fail(ErrorKind::kData, "model file checksum mismatch");
  BinaryReader r(body);
  r.expect_magic(kMagic);
  if (r.u32() != kVersion) fail(ErrorKind::kData, "unsupported log-linear model version");
  std::vector<std::string> types(r.u32());
  for (auto& t : types) t = r.str();
  LogLinearModel m;
  m.tagset_ = TagSet(types);
  m.templates_.window = r.i32();
  m.templates_.affix_max = r.i32();
  m.templates_.templates.resize(r.u32());
  for (auto& t : m.templates_.templates) {
    const auto kind = r.u8();
    if (kind > static_cast<std::uint8_t>(TemplateKind::kBigramWord)) fail(ErrorKind::kData, "bad template kind");
    t.kind = static_cast<TemplateKind>(kind);
    t.param = r.i32();
  }
  m.conjoin_ = r.u8() != 0;
  m.languages_.resize(r.u32());
  for (auto& l : m.languages_) l = r.str();
  m.default_language_ = r.str();
  const std::uint32_t count = r.u32();
  r.require(static_cast<std::size_t>(count) * 24);
  const int k = m.tagset_.size();
  for (std::uint32_t id = 0; id < count; ++id) {
    FeatureKey key;
    key.attr = r.str();
    key.language = r.str();
    key.prev = r.i32();
    key.tag = r.i32();
    if (key.tag < 0 || key.tag >= k || key.prev < -1 || key.prev > k) fail(ErrorKind::kData, "bad feature record");
    const double weight = r.f64();
    if (m.index_.add(key, m.tagset_) != static_cast<int>(id)) fail(ErrorKind::kData, "duplicate feature record");
    m.register_key(key, static_cast<int>(id));
    m.weights_.push_back(weight);
  }
  if (!r.done()) fail(ErrorKind::kData, "trailing bytes in model file");
  m.index_.freeze();
  return m;
}

void LogLinearModel::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

LogLinearModel LogLinearModel::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

}  // namespace xlner
