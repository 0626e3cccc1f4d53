// Independent reference computations used by the tests. Everything here is
// written as plain loops over std::vector so it shares no code with the
// library's dynamic programs or Eigen kernels.
#ifndef XLNER_TESTS_ORACLES_HPP_
#define XLNER_TESTS_ORACLES_HPP_

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "xlner/corpus.hpp"
#include "xlner/crf.hpp"
#include "xlner/neural.hpp"
#include "xlner/rng.hpp"
#include "xlner/utf8.hpp"

namespace oracle {

using xlner::LogLattice;
using xlner::TagId;

inline LogLattice random_lattice(xlner::SplitMix64& rng, int n, int k, double lo = -2.0, double hi = 2.0) {
  LogLattice lat(n, k);
  for (double& v : lat.raw()) v = rng.uniform(lo, hi);
  return lat;
}

// Integer scores make exact ties common and keep sums exact.
inline LogLattice integer_lattice(xlner::SplitMix64& rng, int n, int k, int levels) {
  LogLattice lat(n, k);
  for (double& v : lat.raw()) v = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels)));
  return lat;
}

inline double path_score(const LogLattice& lat, const std::vector<TagId>& tags) {
  double s = lat.start(tags[0]);
  for (int i = 1; i < lat.length(); ++i) s += lat.at(i, tags[static_cast<std::size_t>(i - 1)], tags[static_cast<std::size_t>(i)]);
  return s;
}

// Calls fn(tags) for all k^n sequences in lexicographic order.
inline void for_each_path(int n, int k, const std::function<void(const std::vector<TagId>&)>& fn) {
  std::vector<TagId> tags(static_cast<std::size_t>(n), 0);
  for (;;) {
    fn(tags);
    int pos = n - 1;
    while (pos >= 0 && ++tags[static_cast<std::size_t>(pos)] == k) tags[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) return;
  }
}

struct Enumeration {
  double log_z = 0.0;
  std::vector<std::vector<double>> node;                // [n][k]
  std::vector<std::vector<std::vector<double>>> edge;   // [n][k_prev][k], prev 0 at i = 0
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<TagId> best;  // argmax under the lowest-index backpointer rule
};

// Among equal-score paths the lowest-index rule prefers the smallest last
// tag, then the smallest second-to-last, and so on.
inline bool colex_less(const std::vector<TagId>& a, const std::vector<TagId>& b) {
  for (std::size_t i = a.size(); i-- > 0;) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

inline Enumeration enumerate(const LogLattice& lat) {
  const int n = lat.length();
  const int k = lat.num_tags();
  Enumeration e;
  std::vector<double> scores;
  std::vector<std::vector<TagId>> paths;
  double max = -std::numeric_limits<double>::infinity();
  for_each_path(n, k, [&](const std::vector<TagId>& tags) {
    const double s = path_score(lat, tags);
    scores.push_back(s);
    paths.push_back(tags);
    max = std::max(max, s);
    if (s > e.best_score || (s == e.best_score && colex_less(tags, e.best))) {
      e.best_score = s;
      e.best = tags;
    }
  });
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - max);
  e.log_z = max + std::log(sum);
  e.node.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(k), 0.0));
  e.edge.assign(static_cast<std::size_t>(n), std::vector<std::vector<double>>(
                                                 static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k), 0.0)));
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const double prob = std::exp(scores[p] - e.log_z);
    const auto& tags = paths[p];
    for (int i = 0; i < n; ++i) {
      const auto t = static_cast<std::size_t>(tags[static_cast<std::size_t>(i)]);
      e.node[static_cast<std::size_t>(i)][t] += prob;
      const auto prev = i == 0 ? 0 : static_cast<std::size_t>(tags[static_cast<std::size_t>(i - 1)]);
      e.edge[static_cast<std::size_t>(i)][prev][t] += prob;
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Straight-line LSTM and neural scorer reference. Parameters are read out of
// the model's store by tensor name into nested vectors, then every product
// is an explicit index loop.

using Matrix = std::vector<std::vector<double>>;  // [row][col]
using Vector = std::vector<double>;

inline Matrix tensor(const xlner::NeuralModel& model, const std::string& name) {
  const auto& store = model.params();
  const int id = store.find(name);
  if (id < 0) throw std::runtime_error("no tensor " + name);
  const auto& info = store.info(id);
  Matrix m(static_cast<std::size_t>(info.rows), Vector(static_cast<std::size_t>(info.cols)));
  for (int c = 0; c < info.cols; ++c) {
    for (int r = 0; r < info.rows; ++r) {
      m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
          static_cast<double>(store.values()[info.offset + static_cast<std::size_t>(c) * static_cast<std::size_t>(info.rows) + static_cast<std::size_t>(r)]);
    }
  }
  return m;
}

inline Vector column(const Matrix& m, int c) {
  Vector v(m.size());
  for (std::size_t r = 0; r < m.size(); ++r) v[r] = m[r][static_cast<std::size_t>(c)];
  return v;
}

inline Vector matvec(const Matrix& m, const Vector& x) {
  Vector y(m.size(), 0.0);
  for (std::size_t r = 0; r < m.size(); ++r) {
    for (std::size_t c = 0; c < x.size(); ++c) y[r] += m[r][c] * x[c];
  }
  return y;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// One LSTM step; weight is [4H x (In + H)] with gates i, f, o, g.
inline void lstm_step(const Matrix& w, const Matrix& b, const Vector& x, Vector& h, Vector& c) {
  const std::size_t hidden = h.size();
  Vector input(x);
  input.insert(input.end(), h.begin(), h.end());
  Vector z = matvec(w, input);
  for (std::size_t j = 0; j < z.size(); ++j) z[j] += b[j][0];
  Vector h_new(hidden), c_new(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double ig = sigmoid(z[j]);
    const double fg = sigmoid(z[hidden + j]);
    const double og = sigmoid(z[2 * hidden + j]);
    const double gg = std::tanh(z[3 * hidden + j]);
    c_new[j] = fg * c[j] + ig * gg;
    h_new[j] = og * std::tanh(c_new[j]);
  }
  h = h_new;
  c = c_new;
}

inline std::vector<Vector> lstm_run(const Matrix& w, const Matrix& b, const std::vector<Vector>& xs) {
  const std::size_t hidden = b.size() / 4;
  Vector h(hidden, 0.0), c(hidden, 0.0);
  std::vector<Vector> out;
  for (const auto& x : xs) {
    lstm_step(w, b, x, h, c);
    out.push_back(h);
  }
  return out;
}

inline Vector word_vector(const xlner::NeuralModel& model, const std::string& word, const std::string& language) {
  const Matrix emb = tensor(model, "char_embedding");
  const auto& enc = model.char_encoder(language);
  std::vector<Vector> xs;
  const auto scalars = *xlner::utf8::decode(word);
  for (char32_t ch : scalars) xs.push_back(column(emb, enc.lookup(ch)));
  const auto hs = lstm_run(tensor(model, "char_lstm.W"), tensor(model, "char_lstm.b"), xs);
  Vector out = hs.back();
  const auto& table = model.word_table(language);
  const Vector e = column(tensor(model, "word_table." + language), table.lookup(word));
  out.insert(out.end(), e.begin(), e.end());
  return out;
}

// Rows s_i of the sentence representation.
inline std::vector<Vector> sentence_vectors(const xlner::NeuralModel& model, const xlner::Sentence& sentence) {
  std::vector<Vector> xs;
  for (const auto& w : sentence.tokens) xs.push_back(word_vector(model, w, sentence.language));
  std::vector<Vector> fwd = xs;
  std::vector<Vector> bwd(xs.rbegin(), xs.rend());
  for (int l = 0; l < model.dims().lstm_layers; ++l) {
    const std::string f = "bilstm.fwd." + std::to_string(l);
    const std::string b = "bilstm.bwd." + std::to_string(l);
    fwd = lstm_run(tensor(model, f + ".W"), tensor(model, f + ".b"), fwd);
    bwd = lstm_run(tensor(model, b + ".W"), tensor(model, b + ".b"), bwd);
  }
  const Matrix p = tensor(model, "projection.P");
  const Matrix pb = tensor(model, "projection.bias");
  const std::size_t n = xs.size();
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector h = fwd[i];
    const Vector& back = bwd[n - 1 - i];
    h.insert(h.end(), back.begin(), back.end());
    Vector s = matvec(p, h);
    for (std::size_t r = 0; r < s.size(); ++r) s[r] += pb[r][0];
    out.push_back(s);
  }
  return out;
}

// score[i][prev][cur] of the configured scorer, computed scalar by scalar.
inline double lattice_entry(const xlner::NeuralModel& model, const std::vector<Vector>& s, const std::string& language,
                            int i, int prev, int cur) {
  const int k = model.tagset().size();
  const Matrix a = tensor(model, "transitions");
  double score = a[static_cast<std::size_t>(i == 0 ? k : prev)][static_cast<std::size_t>(cur)];
  const Vector& si = s[static_cast<std::size_t>(i)];
  if (model.scorer() == xlner::ScorerKind::kMono) {
    const Matrix o = tensor(model, "tag_embedding");
    const Matrix w = tensor(model, "W");
    for (std::size_t r = 0; r < o.size(); ++r) {
      double ws = 0.0;
      for (std::size_t c = 0; c < si.size(); ++c) ws += w[r][c] * si[c];
      score += o[r][static_cast<std::size_t>(cur)] * ws;
    }
    return score;
  }
  const Matrix u_mat = tensor(model, "U");
  const Matrix u = tensor(model, "u");
  const Matrix b = tensor(model, "b");
  const Matrix l = tensor(model, "lang_embedding");
  int lang = 0;
  while (model.languages()[static_cast<std::size_t>(lang)] != language) ++lang;
  Vector input = si;
  for (std::size_t r = 0; r < l.size(); ++r) input.push_back(l[r][static_cast<std::size_t>(lang)]);
  Vector hidden(u_mat.size());
  for (std::size_t r = 0; r < u_mat.size(); ++r) {
    double z = b[r][0];
    for (std::size_t c = 0; c < input.size(); ++c) z += u_mat[r][c] * input[c];
    hidden[r] = std::tanh(z);
    score += u[r][0] * hidden[r];
  }
  if (model.config().tag_dependent_emission) {
    const Matrix o = tensor(model, "tag_embedding");
    const Matrix w = tensor(model, "W");
    for (std::size_t r = 0; r < o.size(); ++r) {
      double wh = 0.0;
      for (std::size_t c = 0; c < hidden.size(); ++c) wh += w[r][c] * hidden[c];
      score += o[r][static_cast<std::size_t>(cur)] * wh;
    }
  }
  return score;
}

// ---------------------------------------------------------------------------
// Scalar AdaDelta step.
struct ScalarAdaDelta {
  double eg = 0.0;
  double ex = 0.0;
  double step(double g, double rho = 0.95, double eps = 1e-6, double lr = 1.0) {
    eg = rho * eg + (1 - rho) * g * g;
    const double dx = -std::sqrt(ex + eps) / std::sqrt(eg + eps) * g;
    ex = rho * ex + (1 - rho) * dx * dx;
    return lr * dx;
  }
};

}  // namespace oracle

#endif  // XLNER_TESTS_ORACLES_HPP_
