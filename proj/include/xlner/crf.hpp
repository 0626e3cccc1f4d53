#ifndef XLNER_CRF_HPP_
#define XLNER_CRF_HPP_

#include <cstddef>
#include <vector>

#include "xlner/corpus.hpp"

namespace xlner {

// Score used for hard exclusions. Large enough that exp() underflows to 0
// after normalization, small enough that sums stay finite.
inline constexpr double kExcludedScore = -1e9;

// Edge log-potentials of one sentence. Position 0 has a single left
// context (the beginning-of-tagging symbol), so it stores k scores;
// every later position stores a k x k block indexed [prev][cur].
class LogLattice {
 public:
  LogLattice() = default;
  LogLattice(int length, int num_tags);

  int length() const { return length_; }
  int num_tags() const { return num_tags_; }
  // Number of left contexts at position i: 1 at i = 0, else k.
  int num_prev(int i) const { return i == 0 ? 1 : num_tags_; }

  // prev is ignored at i = 0.
  double& at(int i, int prev, int cur) { return scores_[offset(i, prev, cur)]; }
  double at(int i, int prev, int cur) const { return scores_[offset(i, prev, cur)]; }

  double& start(int cur) { return scores_[static_cast<std::size_t>(cur)]; }
  double start(int cur) const { return scores_[static_cast<std::size_t>(cur)]; }

  // Adds c to every score at position i.
  void shift(int i, double c);

  std::vector<double>& raw() { return scores_; }
  const std::vector<double>& raw() const { return scores_; }

  // Flat offset, same layout as raw().
  std::size_t offset(int i, int prev, int cur) const {
    if (i == 0) return static_cast<std::size_t>(cur);
    return static_cast<std::size_t>(num_tags_) +
           (static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(num_tags_) + static_cast<std::size_t>(prev)) *
               static_cast<std::size_t>(num_tags_) +
           static_cast<std::size_t>(cur);
  }

 private:
  int length_ = 0;
  int num_tags_ = 0;
  std::vector<double> scores_;
};

struct Posteriors {
  int length = 0;
  int num_tags = 0;
  std::vector<double> node;  // [n][k]
  LogLattice edge;           // same layout as the input lattice
  double log_z = 0.0;

  double node_marginal(int i, int t) const {
    return node[static_cast<std::size_t>(i) * static_cast<std::size_t>(num_tags) + static_cast<std::size_t>(t)];
  }
};

struct ViterbiResult {
  std::vector<TagId> tags;
  double score = 0.0;
};

// Forward algorithm in log space. Throws ErrorKind::kNumeric on NaN/Inf.
double log_partition(const LogLattice& lattice);

// Exhaustive enumeration of all k^n taggings; refuses instances with more
// than 10^6 paths.
double brute_force_log_partition(const LogLattice& lattice);

// Forward-backward node and edge marginals.
Posteriors posteriors(const LogLattice& lattice);

// Argmax tagging. Ties go to the lower tag index, both for the final tag
// and for every backpointer.
ViterbiResult viterbi(const LogLattice& lattice);

// Unnormalized log score of one tagging.
double sequence_score(const LogLattice& lattice, const std::vector<TagId>& tags);

// log p(tags | sentence) = score - log Z.
double sequence_log_prob(const LogLattice& lattice, const std::vector<TagId>& tags);

void validate_lattice(const LogLattice& lattice);

}  // namespace xlner

#endif  // XLNER_CRF_HPP_
