#include "xlner/neural.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "xlner/error.hpp"
#include "xlner/io.hpp"
#include "xlner/utf8.hpp"

namespace xlner {

namespace {

constexpr char kMagic[] = "XLNRNN01";
constexpr std::uint32_t kVersion = 1;

std::u32string scalars_of(const std::string& word) {
  auto decoded = utf8::decode(word);
  if (!decoded) return std::u32string(word.begin(), word.end());
  return *decoded;
}

void fill_uniform(MatMap m, SplitMix64& rng, double limit) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Real>(rng.uniform(-limit, limit));
  }
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double glorot(const MatMap& m) { return std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols())); }

}  // namespace

void Dims::validate() const {
  if (r1 < 1 || r2 < 1 || r3 < 1 || q < 1 || d_char < 1 || d_char_input < 1 || d_word < 1 || lstm_layers < 1 ||
      lstm_hidden < 1) {
    fail(ErrorKind::kUsage, "all neural dimensions must be positive");
  }
}

int CharEncoder::lookup(char32_t c) const {
  auto it = ids_.find(c);
  return it == ids_.end() ? kUnk : it->second;
}

int WordTable::lookup(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

// Per-batch cache of character encodings, keyed by word form. Backward
// accumulates d(encoding) per unique word and runs the char LSTM backward
// once per word.
struct NeuralModel::CharBatch {
  std::unordered_map<std::string, int> index;
  std::vector<std::vector<int>> char_ids;
  std::vector<LstmLayer::Cache> caches;
  std::vector<Vec> d_out;

  int encode(const NeuralModel& model, const std::string& word) {
    auto it = index.find(word);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(caches.size());
    index.emplace(word, id);
    std::vector<int> ids;
    for (char32_t c : scalars_of(word)) ids.push_back(model.chars_.lookup(c));
    if (ids.empty()) ids.push_back(CharEncoder::kUnk);
    const auto emb = model.params_.map(model.chars_.embedding_);
    Mat x(emb.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t j = 0; j < ids.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = emb.col(ids[j]);
    caches.push_back(model.chars_.lstm_.forward(model.params_, x));
    char_ids.push_back(std::move(ids));
    d_out.push_back(Vec::Zero(model.config_.dims.d_char));
    return id;
  }

  auto output(int id) const { return caches[static_cast<std::size_t>(id)].hidden.rightCols(1); }

  void backward(const NeuralModel& model, RealBuffer& grad) {
    auto d_emb = model.params_.map(grad, model.chars_.embedding_);
    for (std::size_t w = 0; w < caches.size(); ++w) {
      if (d_out[w].isZero(0)) continue;
      const auto steps = caches[w].hidden.cols();
      Mat dh = Mat::Zero(model.config_.dims.d_char, steps);
      dh.col(steps - 1) = d_out[w];
      const Mat dx = model.chars_.lstm_.backward(model.params_, caches[w], dh, grad);
      for (Eigen::Index j = 0; j < steps; ++j) d_emb.col(char_ids[w][static_cast<std::size_t>(j)]) += dx.col(j);
    }
  }
};

struct NeuralModel::Forward {
  int language = 0;
  std::vector<int> char_slots;  // per token, into CharBatch
  std::vector<int> word_ids;    // per token, into the language's table
  Mat omega;                    // (d_char + d_word) x n
  std::vector<LstmLayer::Cache> fwd;
  std::vector<LstmLayer::Cache> bwd;  // run on reversed columns
  Mat hcat;                           // 2H x n
  Mat s;                              // r2 x n
  Mat projected;                      // mono: W s (r1 x n); xling variant: W h (r1 x n)
  Mat hidden;                         // xling: tanh(U [s; l] + b) (q x n)
  Mat emission;                       // k x n
  LogLattice lattice;
};

NeuralModel NeuralModel::create(const NeuralConfig& config, const TagSet& tagset, std::vector<std::string> languages,
                                const std::vector<const Corpus*>& vocab_corpora) {
  config.dims.validate();
  if (languages.empty()) fail(ErrorKind::kUsage, "neural model needs at least one language");
  NeuralModel m;
  m.config_ = config;
  m.tagset_ = tagset;
  m.languages_ = std::move(languages);
  m.default_language_ = m.languages_.front();

  // Characters in first-seen order across all corpora.
  std::vector<std::map<std::string, int>> counts(m.languages_.size());
  std::vector<std::vector<std::string>> order(m.languages_.size());
  for (const Corpus* corpus : vocab_corpora) {
    for (const auto& ls : *corpus) {
      const int lang = m.language_index(ls.sentence.language);
      for (const auto& tok : ls.sentence.tokens) {
        for (char32_t c : scalars_of(tok)) {
          if (!m.chars_.ids_.count(c)) {
            m.chars_.chars_.push_back(c);
            m.chars_.ids_.emplace(c, static_cast<int>(m.chars_.chars_.size()));
          }
        }
        auto& cnt = counts[static_cast<std::size_t>(lang)][tok];
        if (cnt++ == 0) order[static_cast<std::size_t>(lang)].push_back(tok);
      }
    }
  }
  for (std::size_t l = 0; l < m.languages_.size(); ++l) {
    WordTable table;
    table.language_ = m.languages_[l];
    for (const auto& w : order[l]) {
      if (counts[l][w] >= config.word_min_count) {
        table.words_.push_back(w);
        table.ids_.emplace(w, static_cast<int>(table.words_.size()));
      }
    }
    m.words_.push_back(std::move(table));
  }
  m.register_parameters();
  m.initialize(config.seed);
  return m;
}

void NeuralModel::register_parameters() {
  const Dims& d = config_.dims;
  const int k = tagset_.size();
  chars_.embedding_ = params_.add("char_embedding", "char_embedding", d.d_char_input, chars_.vocab_size());
  chars_.lstm_ = LstmLayer(params_, "char_lstm", "char_lstm", d.d_char_input, d.d_char);
  for (auto& table : words_) {
    table.tensor_ = params_.add("word_table." + table.language_, "word_tables", d.d_word, table.vocab_size());
  }
  const int in = d.d_char + d.d_word;
  forward_layers_.clear();
  backward_layers_.clear();
  for (int l = 0; l < d.lstm_layers; ++l) {
    const int layer_in = l == 0 ? in : d.lstm_hidden;
    forward_layers_.emplace_back(params_, "bilstm.fwd." + std::to_string(l), "bilstm", layer_in, d.lstm_hidden);
  }
  for (int l = 0; l < d.lstm_layers; ++l) {
    const int layer_in = l == 0 ? in : d.lstm_hidden;
    backward_layers_.emplace_back(params_, "bilstm.bwd." + std::to_string(l), "bilstm", layer_in, d.lstm_hidden);
  }
  projection_ = params_.add("projection.P", "projection", d.r2, 2 * d.lstm_hidden);
  projection_bias_ = params_.add("projection.bias", "projection", d.r2, 1);
  transitions_ = params_.add("transitions", "transitions", k + 1, k);
  if (config_.scorer == ScorerKind::kMono) {
    tag_embedding_ = params_.add("tag_embedding", "tag_embeddings", d.r1, k);
    interaction_ = params_.add("W", "W", d.r1, d.r2);
  } else {
    lang_embedding_ = params_.add("lang_embedding", "language_embeddings", d.r3, static_cast<int>(languages_.size()));
    xl_project_ = params_.add("U", "U", d.q, d.r2 + d.r3);
    xl_vector_ = params_.add("u", "u", d.q, 1);
    xl_bias_ = params_.add("b", "b", d.q, 1);
    if (config_.tag_dependent_emission) {
      tag_embedding_ = params_.add("tag_embedding", "tag_embeddings", d.r1, k);
      interaction_ = params_.add("W", "W", d.r1, d.q);
    }
  }
}

// Every tensor (and every vocabulary column) draws from its own stream keyed
// by name, so a tensor's initial values do not depend on which other
// languages or characters happen to be registered.
void NeuralModel::initialize(std::uint64_t seed) {
  auto stream = [seed](std::string_view key) { return SplitMix64(derive_seed(seed, fnv1a(key))); };
  auto init_columns = [&](int id, const std::string& prefix, const std::vector<std::string>& keys) {
    auto m = params_.map(id);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      SplitMix64 rng = stream(prefix + (j == 0 ? std::string("\x1f<unk>") : keys[static_cast<std::size_t>(j - 1)]));
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Real>(rng.uniform(-0.1, 0.1));
    }
  };
  std::vector<std::string> char_keys;
  for (char32_t c : chars_.chars_) char_keys.push_back(std::to_string(static_cast<std::uint32_t>(c)));
  init_columns(chars_.embedding_, "char_embedding/", char_keys);
  {
    SplitMix64 rng = stream("char_lstm");
    chars_.lstm_.initialize(params_, rng);
  }
  for (const auto& table : words_) init_columns(table.tensor_, "word_table." + table.language_ + "/", table.words_);
  for (std::size_t l = 0; l < forward_layers_.size(); ++l) {
    SplitMix64 rng = stream("bilstm.fwd." + std::to_string(l));
    forward_layers_[l].initialize(params_, rng);
  }
  for (std::size_t l = 0; l < backward_layers_.size(); ++l) {
    SplitMix64 rng = stream("bilstm.bwd." + std::to_string(l));
    backward_layers_[l].initialize(params_, rng);
  }
  auto init_uniform = [&](int id, std::string_view name, double limit) {
    SplitMix64 rng = stream(name);
    fill_uniform(params_.map(id), rng, limit);
  };
  init_uniform(projection_, "projection.P", glorot(params_.map(projection_)));
  params_.map(projection_bias_).setZero();
  params_.map(transitions_).setZero();
  if (tag_embedding_ >= 0) init_uniform(tag_embedding_, "tag_embedding", 0.1);
  if (interaction_ >= 0) init_uniform(interaction_, "W", glorot(params_.map(interaction_)));
  if (lang_embedding_ >= 0) {
    auto m = params_.map(lang_embedding_);
    for (std::size_t l = 0; l < languages_.size(); ++l) {
      SplitMix64 rng = stream("lang_embedding/" + languages_[l]);
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, static_cast<Eigen::Index>(l)) = static_cast<Real>(rng.uniform(-0.1, 0.1));
    }
    init_uniform(xl_project_, "U", glorot(params_.map(xl_project_)));
    init_uniform(xl_vector_, "u", 0.1);
    params_.map(xl_bias_).setZero();
  }
}

bool NeuralModel::has_language(std::string_view code) const {
  return std::find(languages_.begin(), languages_.end(), code) != languages_.end();
}

int NeuralModel::language_index(std::string_view code) const {
  for (std::size_t i = 0; i < languages_.size(); ++i) {
    if (languages_[i] == code) return static_cast<int>(i);
  }
  fail(ErrorKind::kData, "language '" + std::string(code) + "' is not registered with this model");
}

const CharEncoder& NeuralModel::char_encoder(std::string_view language) const {
  language_index(language);
  return chars_;
}

int NeuralModel::transitions_tensor(std::string_view language) const {
  language_index(language);
  return transitions_;
}

const WordTable& NeuralModel::word_table(std::string_view language) const {
  return words_[static_cast<std::size_t>(language_index(language))];
}

Vec NeuralModel::encode_word(const std::string& word, std::string_view language) const {
  if (word.empty()) fail(ErrorKind::kData, "cannot encode an empty word");
  const auto& table = word_table(language);
  CharBatch chars;
  const int slot = chars.encode(*this, word);
  Vec out(config_.dims.d_char + config_.dims.d_word);
  out.head(config_.dims.d_char) = chars.output(slot);
  out.tail(config_.dims.d_word) = params_.map(table.tensor_).col(table.lookup(word));
  return out;
}

NeuralModel::Forward NeuralModel::run_forward(const Sentence& sentence, std::string_view language,
                                              CharBatch& chars) const {
  const Dims& d = config_.dims;
  const auto n = static_cast<Eigen::Index>(sentence.size());
  if (n == 0) fail(ErrorKind::kData, "cannot score an empty sentence");
  const int k = tagset_.size();
  Forward f;
  f.language = language_index(language);
  const auto& table = words_[static_cast<std::size_t>(f.language)];
  const auto words = params_.map(table.tensor_);
  f.omega.resize(d.d_char + d.d_word, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& tok = sentence.tokens[static_cast<std::size_t>(i)];
    const int slot = chars.encode(*this, tok);
    const int wid = table.lookup(tok);
    f.char_slots.push_back(slot);
    f.word_ids.push_back(wid);
    f.omega.col(i).head(d.d_char) = chars.output(slot);
    f.omega.col(i).tail(d.d_word) = words.col(wid);
  }
  Mat x = f.omega;
  for (const auto& layer : forward_layers_) {
    f.fwd.push_back(layer.forward(params_, x));
    x = f.fwd.back().hidden;
  }
  x = f.omega.rowwise().reverse();
  for (const auto& layer : backward_layers_) {
    f.bwd.push_back(layer.forward(params_, x));
    x = f.bwd.back().hidden;
  }
  const int h = d.lstm_hidden;
  f.hcat.resize(2 * h, n);
  f.hcat.topRows(h) = f.fwd.back().hidden;
  f.hcat.bottomRows(h) = f.bwd.back().hidden.rowwise().reverse();
  f.s = params_.map(projection_) * f.hcat;
  f.s.colwise() += params_.map(projection_bias_).col(0);

  if (config_.scorer == ScorerKind::kMono) {
    f.projected = params_.map(interaction_) * f.s;
    f.emission = params_.map(tag_embedding_).transpose() * f.projected;
  } else {
    const auto u_mat = params_.map(xl_project_);
    Vec lang_term = u_mat.rightCols(d.r3) * params_.map(lang_embedding_).col(f.language);
    lang_term += params_.map(xl_bias_).col(0);
    Mat z = u_mat.leftCols(d.r2) * f.s;
    z.colwise() += lang_term;
    f.hidden = z.array().tanh().matrix();
    const Mat shared = params_.map(xl_vector_).transpose() * f.hidden;  // 1 x n
    f.emission = shared.replicate(k, 1);
    if (config_.tag_dependent_emission) {
      f.projected = params_.map(interaction_) * f.hidden;
      f.emission.noalias() += params_.map(tag_embedding_).transpose() * f.projected;
    }
  }

  const auto a = params_.map(transitions_);
  f.lattice = LogLattice(static_cast<int>(n), k);
  for (int t = 0; t < k; ++t) f.lattice.start(t) = static_cast<double>(a(k, t)) + static_cast<double>(f.emission(t, 0));
  for (int i = 1; i < n; ++i) {
    for (int p = 0; p < k; ++p) {
      for (int t = 0; t < k; ++t) {
        f.lattice.at(i, p, t) = static_cast<double>(a(p, t)) + static_cast<double>(f.emission(t, i));
      }
    }
  }
  return f;
}

void NeuralModel::run_backward(const Forward& f, const Mat& d_emission, CharBatch& chars,
                               RealBuffer& grad) const {
  const Dims& d = config_.dims;
  const auto n = f.omega.cols();
  Mat ds;
  if (config_.scorer == ScorerKind::kMono) {
    const auto o = params_.map(tag_embedding_);
    params_.map(grad, tag_embedding_).noalias() += f.projected * d_emission.transpose();
    const Mat d_projected = o * d_emission;
    params_.map(grad, interaction_).noalias() += d_projected * f.s.transpose();
    ds = params_.map(interaction_).transpose() * d_projected;
  } else {
    const Mat d_shared = d_emission.colwise().sum();  // 1 x n
    Mat d_hidden = params_.map(xl_vector_) * d_shared;
    params_.map(grad, xl_vector_).noalias() += f.hidden * d_shared.transpose();
    if (config_.tag_dependent_emission) {
      const auto o = params_.map(tag_embedding_);
      params_.map(grad, tag_embedding_).noalias() += f.projected * d_emission.transpose();
      const Mat d_projected = o * d_emission;
      params_.map(grad, interaction_).noalias() += d_projected * f.hidden.transpose();
      d_hidden.noalias() += params_.map(interaction_).transpose() * d_projected;
    }
    const Mat dz = d_hidden.cwiseProduct((Mat::Ones(f.hidden.rows(), n) - f.hidden.cwiseProduct(f.hidden)));
    const auto u_mat = params_.map(xl_project_);
    auto du_mat = params_.map(grad, xl_project_);
    du_mat.leftCols(d.r2).noalias() += dz * f.s.transpose();
    const Vec dz_sum = dz.rowwise().sum();
    du_mat.rightCols(d.r3).noalias() += dz_sum * params_.map(lang_embedding_).col(f.language).transpose();
    params_.map(grad, xl_bias_).col(0) += dz_sum;
    params_.map(grad, lang_embedding_).col(f.language).noalias() += u_mat.rightCols(d.r3).transpose() * dz_sum;
    ds = u_mat.leftCols(d.r2).transpose() * dz;
  }

  params_.map(grad, projection_).noalias() += ds * f.hcat.transpose();
  params_.map(grad, projection_bias_).col(0) += ds.rowwise().sum();
  const Mat d_hcat = params_.map(projection_).transpose() * ds;
  const int h = d.lstm_hidden;

  Mat dx = d_hcat.topRows(h);
  for (int l = static_cast<int>(forward_layers_.size()) - 1; l >= 0; --l) {
    dx = forward_layers_[static_cast<std::size_t>(l)].backward(params_, f.fwd[static_cast<std::size_t>(l)], dx, grad);
  }
  Mat d_omega = dx;
  dx = d_hcat.bottomRows(h).rowwise().reverse();
  for (int l = static_cast<int>(backward_layers_.size()) - 1; l >= 0; --l) {
    dx = backward_layers_[static_cast<std::size_t>(l)].backward(params_, f.bwd[static_cast<std::size_t>(l)], dx, grad);
  }
  d_omega += dx.rowwise().reverse();

  auto d_words = params_.map(grad, words_[static_cast<std::size_t>(f.language)].tensor_);
  for (Eigen::Index i = 0; i < n; ++i) {
    chars.d_out[static_cast<std::size_t>(f.char_slots[static_cast<std::size_t>(i)])] += d_omega.col(i).head(d.d_char);
    d_words.col(f.word_ids[static_cast<std::size_t>(i)]) += d_omega.col(i).tail(d.d_word);
  }
}

Mat NeuralModel::encode_sentence(const Sentence& sentence) const {
  CharBatch chars;
  const std::string& lang = sentence.language.empty() ? default_language_ : sentence.language;
  return run_forward(sentence, lang, chars).s.transpose();
}

LogLattice NeuralModel::mono_lattice(const Sentence& sentence) const {
  if (config_.scorer != ScorerKind::kMono) fail(ErrorKind::kUsage, "model is not configured with the mono scorer");
  CharBatch chars;
  const std::string& lang = sentence.language.empty() ? default_language_ : sentence.language;
  return run_forward(sentence, lang, chars).lattice;
}

LogLattice NeuralModel::xling_lattice(const Sentence& sentence, std::string_view language) const {
  if (config_.scorer != ScorerKind::kXling) {
    fail(ErrorKind::kUsage, "model is not configured with the cross-lingual scorer");
  }
  CharBatch chars;
  return run_forward(sentence, language, chars).lattice;
}

LogLattice NeuralModel::lattice(const Sentence& sentence) const {
  const std::string& lang = sentence.language.empty() ? default_language_ : sentence.language;
  CharBatch chars;
  return run_forward(sentence, lang, chars).lattice;
}

std::vector<TagId> NeuralModel::predict(const Sentence& sentence) const {
  auto tags = viterbi(lattice(sentence)).tags;
  repair_bio(tags, tagset_);
  return tags;
}

double NeuralModel::accumulate(const std::vector<WeightedSentence>& batch, std::size_t begin, std::size_t end,
                               RealBuffer* grad) const {
  const int k = tagset_.size();
  CharBatch chars;
  double total = 0.0;
  for (std::size_t s = begin; s < end; ++s) {
    const auto& ex = batch[s];
    const auto& ls = *ex.sentence;
    const auto f = run_forward(ls.sentence, ls.sentence.language, chars);
    const int n = f.lattice.length();
    for (double v : f.lattice.raw()) {
      if (!std::isfinite(v)) fail(ErrorKind::kNumeric, "non-finite loss at batch sentence " + std::to_string(s));
    }
    if (!grad) {
      const double lp = sequence_log_prob(f.lattice, ls.tags);
      if (!std::isfinite(lp)) fail(ErrorKind::kNumeric, "non-finite loss at batch sentence " + std::to_string(s));
      total -= ex.weight * lp;
      continue;
    }
    const auto post = posteriors(f.lattice);
    const double lp = sequence_score(f.lattice, ls.tags) - post.log_z;
    if (!std::isfinite(lp)) fail(ErrorKind::kNumeric, "non-finite loss at batch sentence " + std::to_string(s));
    total -= ex.weight * lp;
    if (ex.weight == 0.0) continue;
    // d loss / d score[i][p][t] = weight * (marginal - gold indicator)
    Mat d_emission = Mat::Zero(k, n);
    auto d_trans = params_.map(*grad, transitions_);
    for (int i = 0; i < n; ++i) {
      const TagId gold = ls.tags[static_cast<std::size_t>(i)];
      for (int t = 0; t < k; ++t) {
        const double dn = ex.weight * (post.node_marginal(i, t) - (t == gold ? 1.0 : 0.0));
        d_emission(t, i) = static_cast<Real>(dn);
      }
      if (i == 0) {
        for (int t = 0; t < k; ++t) d_trans(k, t) += d_emission(t, 0);
      } else {
        const TagId gold_prev = ls.tags[static_cast<std::size_t>(i - 1)];
        for (int p = 0; p < k; ++p) {
          for (int t = 0; t < k; ++t) {
            const double ind = (p == gold_prev && t == gold) ? 1.0 : 0.0;
            d_trans(p, t) += static_cast<Real>(ex.weight * (post.edge.at(i, p, t) - ind));
          }
        }
      }
    }
    run_backward(f, d_emission, chars, *grad);
  }
  if (grad) chars.backward(*this, *grad);
  return total;
}

double NeuralModel::loss(const std::vector<WeightedSentence>& batch) const {
  return accumulate(batch, 0, batch.size(), nullptr);
}

double NeuralModel::loss_and_gradients(const std::vector<WeightedSentence>& batch, RealBuffer& grad,
                                       int threads) const {
  if (batch.empty()) fail(ErrorKind::kUsage, "empty batch");
  const int chunks = std::max(1, std::min<int>(threads, static_cast<int>(batch.size())));
  if (chunks == 1) {
    grad.assign(params_.size(), Real(0));
    return accumulate(batch, 0, batch.size(), &grad);
  }
  std::vector<RealBuffer> partial(static_cast<std::size_t>(chunks));
  std::vector<double> losses(static_cast<std::size_t>(chunks), 0.0);
  parallel_chunks(batch.size(), chunks, [&](int c, std::size_t begin, std::size_t end) {
    auto& g = partial[static_cast<std::size_t>(c)];
    g.assign(params_.size(), Real(0));
    losses[static_cast<std::size_t>(c)] = accumulate(batch, begin, end, &g);
  });
  grad.assign(params_.size(), Real(0));
  double total = 0.0;
  for (std::size_t c = 0; c < partial.size(); ++c) {
    total += losses[c];
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += partial[c][j];
  }
  return total;
}

std::string NeuralModel::serialize() const {
  BinaryWriter w;
  w.magic(kMagic);
  w.u32(kVersion);
  const Dims& d = config_.dims;
  for (int v : {d.r1, d.r2, d.r3, d.q, d.d_char, d.d_char_input, d.d_word, d.lstm_layers, d.lstm_hidden}) w.i32(v);
  w.u8(config_.scorer == ScorerKind::kMono ? 0 : 1);
  w.u8(config_.tag_dependent_emission ? 1 : 0);
  w.i32(config_.word_min_count);
  w.u64(config_.seed);
  w.u32(static_cast<std::uint32_t>(tagset_.entity_types().size()));
  for (const auto& t : tagset_.entity_types()) w.str(t);
  w.u32(static_cast<std::uint32_t>(languages_.size()));
  for (const auto& l : languages_) w.str(l);
  w.str(default_language_);
  w.u32(static_cast<std::uint32_t>(chars_.chars_.size()));
  for (char32_t c : chars_.chars_) w.u32(static_cast<std::uint32_t>(c));
  for (const auto& table : words_) {
    w.u32(static_cast<std::uint32_t>(table.words_.size()));
    for (const auto& word : table.words_) w.str(word);
  }
  w.u32(static_cast<std::uint32_t>(params_.num_tensors()));
  for (const auto& t : params_.tensors()) {
    w.str(t.name);
    w.i32(t.rows);
    w.i32(t.cols);
    for (std::size_t j = 0; j < t.size(); ++j) w.f64(static_cast<double>(params_.values()[t.offset + j]));
  }
  BinaryWriter out;
  out.magic(w.bytes());
  out.u64(checksum(w.bytes()));
  return out.bytes();
}

NeuralModel NeuralModel::deserialize(const std::string& bytes) {
  if (bytes.size() < 8) fail(ErrorKind::kData, "model file is truncated or corrupted");
  const std::string_view body(bytes.data(), bytes.size() - 8);
  BinaryReader tail(std::string_view(bytes).substr(bytes.size() - 8));
  if (tail.u64() != checksum(body)) fail(ErrorKind::kData, "model file checksum mismatch");
  BinaryReader r(body);
  r.expect_magic(kMagic);
  if (r.u32() != kVersion) fail(ErrorKind::kData, "unsupported neural model version");
  NeuralModel m;
  Dims& d = m.config_.dims;
  for (int* v : {&d.r1, &d.r2, &d.r3, &d.q, &d.d_char, &d.d_char_input, &d.d_word, &d.lstm_layers, &d.lstm_hidden}) {
    *v = r.i32();
  }
  d.validate();
  m.config_.scorer = r.u8() == 0 ? ScorerKind::kMono : ScorerKind::kXling;
  m.config_.tag_dependent_emission = r.u8() != 0;
  m.config_.word_min_count = r.i32();
  m.config_.seed = r.u64();
  std::vector<std::string> types(r.u32());
  for (auto& t : types) t = r.str();
  m.tagset_ = TagSet(types);
  m.languages_.resize(r.u32());
  for (auto& l : m.languages_) l = r.str();
  m.default_language_ = r.str();
  const std::uint32_t num_chars = r.u32();
  r.require(static_cast<std::size_t>(num_chars) * 4);
  for (std::uint32_t i = 0; i < num_chars; ++i) {
    const char32_t c = r.u32();
    m.chars_.chars_.push_back(c);
    m.chars_.ids_.emplace(c, static_cast<int>(m.chars_.chars_.size()));
  }
  for (const auto& lang : m.languages_) {
    WordTable table;
    table.language_ = lang;
    const std::uint32_t count = r.u32();
    r.require(static_cast<std::size_t>(count) * 4);
    for (std::uint32_t i = 0; i < count; ++i) {
      table.words_.push_back(r.str());
      table.ids_.emplace(table.words_.back(), static_cast<int>(table.words_.size()));
    }
    m.words_.push_back(std::move(table));
  }
  m.register_parameters();
  if (r.u32() != static_cast<std::uint32_t>(m.params_.num_tensors())) fail(ErrorKind::kData, "tensor count mismatch");
  for (const auto& t : m.params_.tensors()) {
    if (r.str() != t.name || r.i32() != t.rows || r.i32() != t.cols) {
      fail(ErrorKind::kData, "tensor layout mismatch at " + t.name);
    }
    r.require(t.size() * 8);
    for (std::size_t j = 0; j < t.size(); ++j) m.params_.values()[t.offset + j] = static_cast<Real>(r.f64());
  }
  if (!r.done()) fail(ErrorKind::kData, "trailing bytes in model file");
  return m;
}

void NeuralModel::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

NeuralModel NeuralModel::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

}  // namespace xlner
