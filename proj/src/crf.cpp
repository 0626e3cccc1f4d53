#include "xlner/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "xlner/error.hpp"

namespace xlner {

namespace {

using ConstArray = Eigen::Map<const Eigen::ArrayXd>;

// Scaled sums below this are recomputed exactly in log space.
constexpr double kUnderflowGuard = 1e-250;

// dst[j] = exp(src[j] - shift). Evaluated into aligned scratch so the
// packet/scalar split does not depend on where src and dst live.
void exp_shifted(const double* src, double shift, double* dst, Eigen::Index count, Eigen::ArrayXd& scratch) {
  scratch.resize(count);
  scratch = (ConstArray(src, count) - shift).exp();
  std::copy(scratch.data(), scratch.data() + count, dst);
}

double log_sum_exp(const double* values, int count) {
  double max = values[0];
  for (int i = 1; i < count; ++i) max = std::max(max, values[i]);
  double sum = 0.0;
  for (int i = 0; i < count; ++i) sum += std::exp(values[i] - max);
  return max + std::log(sum);
}

// exp(score - max score at i) for every edge of positions i >= 1, laid out
// like the lattice, plus the per-position max. Both passes share it so each
// edge score is exponentiated once.
struct ScaledEdges {
  std::vector<double> factor;
  std::vector<double> shift;
};

ScaledEdges scale_edges(const LogLattice& lat) {
  const int k = lat.num_tags();
  const int kk = k * k;
  ScaledEdges out;
  out.factor.resize(lat.raw().size());
  out.shift.assign(static_cast<std::size_t>(lat.length()), 0.0);
  Eigen::ArrayXd scratch(kk);
  for (int i = 1; i < lat.length(); ++i) {
    const std::size_t off = lat.offset(i, 0, 0);
    ConstArray s(lat.raw().data() + off, kk);
    const double c = s.maxCoeff();
    out.shift[static_cast<std::size_t>(i)] = c;
    exp_shifted(s.data(), c, out.factor.data() + off, kk, scratch);
  }
  return out;
}

// alpha[i][t]: log-sum over prefixes ending in t at position i.
std::vector<double> forward(const LogLattice& lat, const ScaledEdges& scaled) {
  const int n = lat.length();
  const int k = lat.num_tags();
  std::vector<double> alpha(static_cast<std::size_t>(n * k));
  std::vector<double> u(static_cast<std::size_t>(k));
  std::vector<double> v(static_cast<std::size_t>(k));
  std::vector<double> terms(static_cast<std::size_t>(k));
  Eigen::ArrayXd scratch(k);
  for (int t = 0; t < k; ++t) alpha[static_cast<std::size_t>(t)] = lat.start(t);
  for (int i = 1; i < n; ++i) {
    const double* prev = &alpha[static_cast<std::size_t>((i - 1) * k)];
    const double m = ConstArray(prev, k).maxCoeff();
    exp_shifted(prev, m, u.data(), k, scratch);
    const double* f = scaled.factor.data() + lat.offset(i, 0, 0);
    std::fill(v.begin(), v.end(), 0.0);
    for (int p = 0; p < k; ++p) {
      const double up = u[static_cast<std::size_t>(p)];
      for (int t = 0; t < k; ++t) v[static_cast<std::size_t>(t)] += up * f[p * k + t];
    }
    const double base = m + scaled.shift[static_cast<std::size_t>(i)];
    for (int t = 0; t < k; ++t) {
      double& out = alpha[static_cast<std::size_t>(i * k + t)];
      if (v[static_cast<std::size_t>(t)] >= kUnderflowGuard) {
        out = base + std::log(v[static_cast<std::size_t>(t)]);
      } else {
        for (int p = 0; p < k; ++p) terms[static_cast<std::size_t>(p)] = prev[p] + lat.at(i, p, t);
        out = log_sum_exp(terms.data(), k);
      }
    }
  }
  return alpha;
}

// beta[i][t]: log-sum over suffixes given tag t at position i.
std::vector<double> backward(const LogLattice& lat, const ScaledEdges& scaled) {
  const int n = lat.length();
  const int k = lat.num_tags();
  std::vector<double> beta(static_cast<std::size_t>(n * k), 0.0);
  std::vector<double> u(static_cast<std::size_t>(k));
  std::vector<double> terms(static_cast<std::size_t>(k));
  Eigen::ArrayXd scratch(k);
  for (int i = n - 2; i >= 0; --i) {
    const double* next = &beta[static_cast<std::size_t>((i + 1) * k)];
    const double m = ConstArray(next, k).maxCoeff();
    exp_shifted(next, m, u.data(), k, scratch);
    const double* f = scaled.factor.data() + lat.offset(i + 1, 0, 0);
    const double base = m + scaled.shift[static_cast<std::size_t>(i + 1)];
    for (int p = 0; p < k; ++p) {
      double v = 0.0;
      for (int t = 0; t < k; ++t) v += f[p * k + t] * u[static_cast<std::size_t>(t)];
      double& out = beta[static_cast<std::size_t>(i * k + p)];
      if (v >= kUnderflowGuard) {
        out = base + std::log(v);
      } else {
        for (int t = 0; t < k; ++t) terms[static_cast<std::size_t>(t)] = lat.at(i + 1, p, t) + next[t];
        out = log_sum_exp(terms.data(), k);
      }
    }
  }
  return beta;
}

void check_tags(const LogLattice& lat, const std::vector<TagId>& tags) {
  if (static_cast<int>(tags.size()) != lat.length()) {
    fail(ErrorKind::kData, "tag sequence length " + std::to_string(tags.size()) + " != lattice length " +
                               std::to_string(lat.length()));
  }
  for (TagId t : tags) {
    if (t < 0 || t >= lat.num_tags()) fail(ErrorKind::kData, "invalid tag index " + std::to_string(t));
  }
}

}  // namespace

LogLattice::LogLattice(int length, int num_tags) : length_(length), num_tags_(num_tags) {
  if (length < 1 || num_tags < 1) fail(ErrorKind::kData, "lattice needs n >= 1 and k >= 1");
  scores_.assign(static_cast<std::size_t>(num_tags) +
                     static_cast<std::size_t>(length - 1) * static_cast<std::size_t>(num_tags * num_tags),
                 0.0);
}

void LogLattice::shift(int i, double c) {
  for (int p = 0; p < num_prev(i); ++p) {
    for (int t = 0; t < num_tags_; ++t) at(i, p, t) += c;
  }
}

void validate_lattice(const LogLattice& lattice) {
  if (lattice.length() < 1 || lattice.num_tags() < 1) fail(ErrorKind::kData, "empty lattice");
  for (double v : lattice.raw()) {
    if (!std::isfinite(v)) fail(ErrorKind::kNumeric, "lattice contains a non-finite score");
  }
}

double log_partition(const LogLattice& lattice) {
  validate_lattice(lattice);
  const auto alpha = forward(lattice, scale_edges(lattice));
  const int k = lattice.num_tags();
  return log_sum_exp(&alpha[static_cast<std::size_t>((lattice.length() - 1) * k)], k);
}

double brute_force_log_partition(const LogLattice& lattice) {
  validate_lattice(lattice);
  const int n = lattice.length();
  const int k = lattice.num_tags();
  double paths = 1.0;
  for (int i = 0; i < n; ++i) paths *= k;
  if (paths > 1e6) fail(ErrorKind::kUsage, "brute force limited to 1e6 paths");
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(paths));
  std::vector<TagId> tags(static_cast<std::size_t>(n), 0);
  for (;;) {
    scores.push_back(sequence_score(lattice, tags));
    int pos = n - 1;
    while (pos >= 0 && ++tags[static_cast<std::size_t>(pos)] == k) tags[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
  }
  return log_sum_exp(scores.data(), static_cast<int>(scores.size()));
}

Posteriors posteriors(const LogLattice& lattice) {
  validate_lattice(lattice);
  const int n = lattice.length();
  const int k = lattice.num_tags();
  const auto scaled = scale_edges(lattice);
  const auto alpha = forward(lattice, scaled);
  const auto beta = backward(lattice, scaled);
  Posteriors out;
  out.length = n;
  out.num_tags = k;
  out.log_z = log_sum_exp(&alpha[static_cast<std::size_t>((n - 1) * k)], k);
  out.node.resize(static_cast<std::size_t>(n * k));
  Eigen::ArrayXd scratch = (ConstArray(alpha.data(), n * k) + ConstArray(beta.data(), n * k) - out.log_z).exp();
  std::copy(scratch.data(), scratch.data() + n * k, out.node.data());
  out.edge = LogLattice(n, k);
  for (int t = 0; t < k; ++t) out.edge.start(t) = out.node[static_cast<std::size_t>(t)];
  auto& e = out.edge.raw();
  for (int i = 1; i < n; ++i) {
    const double* a = &alpha[static_cast<std::size_t>((i - 1) * k)];
    const double* b = &beta[static_cast<std::size_t>(i * k)];
    const std::size_t off = lattice.offset(i, 0, 0);
    for (int p = 0; p < k; ++p) {
      const double ap = a[p] - out.log_z;
      for (int t = 0; t < k; ++t) e[off + static_cast<std::size_t>(p * k + t)] = lattice.raw()[off + static_cast<std::size_t>(p * k + t)] + ap + b[t];
    }
  }
  const std::size_t head = static_cast<std::size_t>(k);
  const auto rest = static_cast<Eigen::Index>(e.size() - head);
  exp_shifted(e.data() + head, 0.0, e.data() + head, rest, scratch);
  return out;
}

ViterbiResult viterbi(const LogLattice& lattice) {
  validate_lattice(lattice);
  const int n = lattice.length();
  const int k = lattice.num_tags();
  std::vector<double> delta(static_cast<std::size_t>(n * k));
  std::vector<int> back(static_cast<std::size_t>(n * k), 0);
  for (int t = 0; t < k; ++t) delta[static_cast<std::size_t>(t)] = lattice.start(t);
  for (int i = 1; i < n; ++i) {
    for (int t = 0; t < k; ++t) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int p = 0; p < k; ++p) {
        const double v = delta[static_cast<std::size_t>((i - 1) * k + p)] + lattice.at(i, p, t);
        if (v > best) {
          best = v;
          arg = p;
        }
      }
      delta[static_cast<std::size_t>(i * k + t)] = best;
      back[static_cast<std::size_t>(i * k + t)] = arg;
    }
  }
  ViterbiResult out;
  out.tags.assign(static_cast<std::size_t>(n), 0);
  double best = -std::numeric_limits<double>::infinity();
  int last = 0;
  for (int t = 0; t < k; ++t) {
    const double v = delta[static_cast<std::size_t>((n - 1) * k + t)];
    if (v > best) {
      best = v;
      last = t;
    }
  }
  out.score = best;
  out.tags[static_cast<std::size_t>(n - 1)] = last;
  for (int i = n - 1; i > 0; --i) {
    out.tags[static_cast<std::size_t>(i - 1)] =
        back[static_cast<std::size_t>(i * k + out.tags[static_cast<std::size_t>(i)])];
  }
  return out;
}

double sequence_score(const LogLattice& lattice, const std::vector<TagId>& tags) {
  check_tags(lattice, tags);
  double score = lattice.start(tags[0]);
  for (int i = 1; i < lattice.length(); ++i) {
    score += lattice.at(i, tags[static_cast<std::size_t>(i - 1)], tags[static_cast<std::size_t>(i)]);
  }
  return score;
}

double sequence_log_prob(const LogLattice& lattice, const std::vector<TagId>& tags) {
  check_tags(lattice, tags);
  return sequence_score(lattice, tags) - log_partition(lattice);
}

}  // namespace xlner
