#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "xlner/crf.hpp"
#include "xlner/error.hpp"

using namespace xlner;

TEST_CASE("log_partition small cases") {
  LogLattice one(1, 2);
  CHECK(log_partition(one) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(brute_force_log_partition(one) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  LogLattice two(2, 2);
  CHECK(brute_force_log_partition(two) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  SplitMix64 rng(3);
  const auto lat = oracle::random_lattice(rng, 3, 3);
  CHECK(std::abs(log_partition(lat) - oracle::enumerate(lat).log_z) <= 1e-12);
}

TEST_CASE("log_partition shift identity") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto lat = oracle::random_lattice(rng, 4, 3);
    const double before = log_partition(lat);
    const int i = static_cast<int>(rng.below(4));
    const double c = rng.uniform(-5, 5);
    lat.shift(i, c);
    CHECK(std::abs(log_partition(lat) - (before + c)) <= 1e-12);
  }
}

TEST_CASE("log_partition stays finite for scores of magnitude 700") {
  for (double v : {700.0, -700.0}) {
    LogLattice lat(50, 4);
    for (double& s : lat.raw()) s = v;
    const double z = log_partition(lat);
    CHECK(std::isfinite(z));
    CHECK(z == doctest::Approx(50 * v + 50 * std::log(4.0)).epsilon(1e-12));
  }
}

TEST_CASE("brute force refuses large instances and non-finite scores are errors") {
  CHECK_THROWS_AS(brute_force_log_partition(LogLattice(7, 9)), Error);
  LogLattice lat(2, 2);
  lat.at(1, 0, 1) = std::nan("");
  try {
    log_partition(lat);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
  }
  CHECK_THROWS_AS(posteriors(lat), Error);
  CHECK_THROWS_AS(viterbi(lat), Error);
}

TEST_CASE("forward, brute force and enumeration agree on 200 random lattices") {
  SplitMix64 rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const int k = 1 + static_cast<int>(rng.below(5));
    const auto lat = oracle::random_lattice(rng, n, k);
    worst = std::max(worst, std::abs(log_partition(lat) - brute_force_log_partition(lat)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("posteriors") {
  SUBCASE("uniform lattice") {
    const auto p = posteriors(LogLattice(2, 2));
    for (double v : p.node) CHECK(v == doctest::Approx(0.5).epsilon(1e-14));
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) CHECK(p.edge.at(1, a, b) == doctest::Approx(0.25).epsilon(1e-14));
    }
  }
  SUBCASE("match enumeration and satisfy the marginal invariants") {
    SplitMix64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(5));
      const int k = 1 + static_cast<int>(rng.below(5));
      const auto lat = oracle::random_lattice(rng, n, k);
      const auto p = posteriors(lat);
      const auto e = oracle::enumerate(lat);
      CHECK(std::abs(p.log_z - e.log_z) <= 1e-10);
      for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int t = 0; t < k; ++t) {
          const double m = p.node_marginal(i, t);
          CHECK(std::abs(m - e.node[i][t]) <= 1e-10);
          CHECK(m >= 0.0);
          CHECK(m <= 1.0 + 1e-12);
          row += m;
          double into = 0.0;
          for (int q = 0; q < p.edge.num_prev(i); ++q) {
            CHECK(std::abs(p.edge.at(i, q, t) - e.edge[i][q][t]) <= 1e-10);
            into += p.edge.at(i, q, t);
          }
          CHECK(std::abs(into - m) <= 1e-10);
        }
        CHECK(std::abs(row - 1.0) <= 1e-10);
      }
    }
  }
  SUBCASE("sentinel excludes a tag") {
    SplitMix64 rng(29);
    auto lat = oracle::random_lattice(rng, 4, 3);
    for (int p = 0; p < 3; ++p) lat.at(2, p, 1) = kExcludedScore;
    const auto post = posteriors(lat);
    CHECK(post.node_marginal(2, 1) <= 1e-300);
    CHECK(std::isfinite(post.log_z));
    lat.start(2) = kExcludedScore;
    CHECK(posteriors(lat).node_marginal(0, 2) <= 1e-300);
  }
}

TEST_CASE("gradient of log Z equals edge marginals") {
  SplitMix64 rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto lat = oracle::random_lattice(rng, 1 + static_cast<int>(rng.below(4)), 1 + static_cast<int>(rng.below(4)));
    const auto post = posteriors(lat);
    for (std::size_t j = 0; j < lat.raw().size(); ++j) {
      const double h = 1e-5;
      const double saved = lat.raw()[j];
      lat.raw()[j] = saved + h;
      const double up = log_partition(lat);
      lat.raw()[j] = saved - h;
      const double down = log_partition(lat);
      lat.raw()[j] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = post.edge.raw()[j];
      worst = std::max(worst, std::abs(numeric - analytic));
    }
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("inference is invariant under tag relabeling") {
  SplitMix64 rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4, k = 4;
    const auto lat = oracle::random_lattice(rng, n, k);
    std::vector<int> perm = {0, 1, 2, 3};
    shuffle(perm, rng);
    LogLattice moved(n, k);
    for (int t = 0; t < k; ++t) moved.start(perm[t]) = lat.start(t);
    for (int i = 1; i < n; ++i) {
      for (int p = 0; p < k; ++p) {
        for (int t = 0; t < k; ++t) moved.at(i, perm[p], perm[t]) = lat.at(i, p, t);
      }
    }
    CHECK(std::abs(log_partition(moved) - log_partition(lat)) <= 1e-12);
    const auto a = posteriors(lat);
    const auto b = posteriors(moved);
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < k; ++t) CHECK(std::abs(a.node_marginal(i, t) - b.node_marginal(i, perm[t])) <= 1e-12);
    }
    const auto va = viterbi(lat);
    const auto vb = viterbi(moved);
    for (int i = 0; i < n; ++i) CHECK(perm[va.tags[i]] == vb.tags[i]);
  }
}

TEST_CASE("viterbi examples") {
  LogLattice lat(2, 2);
  lat.start(0) = 5;
  lat.at(1, 0, 0) = 5;
  const auto v = viterbi(lat);
  CHECK(v.tags == std::vector<TagId>{0, 0});
  CHECK(v.score == 10.0);
  CHECK(viterbi(LogLattice(6, 4)).tags == std::vector<TagId>(6, 0));
}

TEST_CASE("viterbi matches exhaustive argmax including ties") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const int k = 1 + static_cast<int>(rng.below(5));
    const auto lat = trial % 2 ? oracle::random_lattice(rng, n, k) : oracle::integer_lattice(rng, n, k, 2);
    const auto v = viterbi(lat);
    const auto e = oracle::enumerate(lat);
    CHECK(std::abs(v.score - e.best_score) <= 1e-12);
    CHECK(v.tags == e.best);
  }
}

TEST_CASE("sequence_log_prob") {
  LogLattice one(1, 2);
  CHECK(sequence_log_prob(one, {0}) == doctest::Approx(std::log(0.5)));
  CHECK(sequence_log_prob(one, {1}) == doctest::Approx(std::log(0.5)));
  CHECK_THROWS_AS(sequence_log_prob(one, {2}), Error);
  CHECK_THROWS_AS(sequence_log_prob(one, {0, 0}), Error);
  SplitMix64 rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(4));
    const int k = 1 + static_cast<int>(rng.below(4));
    const auto lat = oracle::random_lattice(rng, n, k);
    const auto best = viterbi(lat).tags;
    const double best_lp = sequence_log_prob(lat, best);
    const double log_z = log_partition(lat);
    double total = 0.0;
    oracle::for_each_path(n, k, [&](const std::vector<TagId>& tags) {
      const double lp = sequence_log_prob(lat, tags);
      CHECK(lp <= 0.0);
      CHECK(lp <= best_lp + 1e-12);
      CHECK(sequence_score(lat, tags) <= log_z);
      total += std::exp(lp);
    });
    CHECK(std::abs(total - 1.0) <= 1e-10);
  }
}
