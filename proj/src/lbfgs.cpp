#include "xlner/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include "xlner/error.hpp"

namespace xlner {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb),
// safeguarded into the interior of [a, b].
double cubic_min(double a, double fa, double ga, double b, double fb, double gb) {
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  double t;
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
  } else {
    t = 0.5 * (a + b);
  }
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double margin = 0.1 * (hi - lo);
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) t = 0.5 * (a + b);
  return t;
}

struct Point {
  double step = 0.0;
  double value = 0.0;
  double slope = 0.0;  // directional derivative
  std::vector<double> x;
  std::vector<double> grad;
};

class LineSearch {
 public:
  LineSearch(const Objective& f, const LbfgsConfig& config, const std::vector<double>& x0, double f0,
             const std::vector<double>& dir, double slope0)
      : f_(f), config_(config), x0_(x0), f0_(f0), dir_(dir), slope0_(slope0) {}

  // Returns true with `out` set to a strong-Wolfe point, or false if the
  // evaluation budget ran out (out then holds the best decrease found, if
  // any).
  bool run(double initial_step, Point& out) {
    Point prev{0.0, f0_, slope0_, x0_, {}};
    double step = initial_step;
    for (int k = 0; k < config_.max_line_search; ++k) {
      Point cur = evaluate(step);
      if (!std::isfinite(cur.value) || cur.value > f0_ + config_.c1 * step * slope0_ ||
          (k > 0 && cur.value >= prev.value)) {
        if (!std::isfinite(cur.value)) {
          // Shrink until finite before bracketing.
          step = 0.5 * (prev.step + step);
          continue;
        }
        return zoom(prev, cur, out);
      }
      if (std::fabs(cur.slope) <= -config_.c2 * slope0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.slope >= 0.0) return zoom(cur, prev, out);
      remember(cur);
      prev = std::move(cur);
      step *= 2.0;
    }
    return fallback(out);
  }

  int evaluations() const { return evaluations_; }

 private:
  Point evaluate(double step) {
    Point p;
    p.step = step;
    p.x.resize(x0_.size());
    for (std::size_t i = 0; i < x0_.size(); ++i) p.x[i] = x0_[i] + step * dir_[i];
    p.grad.assign(x0_.size(), 0.0);
    p.value = f_(p.x, p.grad);
    p.slope = dot(p.grad, dir_);
    ++evaluations_;
    if (std::isfinite(p.value)) remember(p);
    return p;
  }

  void remember(const Point& p) {
    if (p.value < f0_ + config_.c1 * p.step * slope0_ && (!best_ || p.value < best_->value)) best_ = p;
  }

  bool zoom(Point lo, Point hi, Point& out) {
    while (evaluations_ < config_.max_line_search) {
      const double step = cubic_min(lo.step, lo.value, lo.slope, hi.step, hi.value, hi.slope);
      Point cur = evaluate(step);
      if (!std::isfinite(cur.value) || cur.value > f0_ + config_.c1 * step * slope0_ || cur.value >= lo.value) {
        hi = std::move(cur);
      } else {
        if (std::fabs(cur.slope) <= -config_.c2 * slope0_) {
          out = std::move(cur);
          return true;
        }
        if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
      if (std::fabs(hi.step - lo.step) < 1e-16 * std::max(1.0, std::fabs(lo.step))) break;
    }
    return fallback(out);
  }

  bool fallback(Point& out) {
    if (best_) out = *best_;
    return false;
  }

  const Objective& f_;
  const LbfgsConfig& config_;
  const std::vector<double>& x0_;
  double f0_;
  const std::vector<double>& dir_;
  double slope0_;
  int evaluations_ = 0;
  std::optional<Point> best_;
};

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double> x0, const LbfgsConfig& config,
                           const LbfgsCallback& callback) {
  const std::size_t dim = x0.size();
  LbfgsResult result;
  std::vector<double> x = std::move(x0);
  std::vector<double> grad(dim, 0.0);
  double value = f(x, grad);
  result.evaluations = 1;
  if (!std::isfinite(value)) fail(ErrorKind::kNumeric, "objective is not finite at the initial point");
  result.trace.push_back(value);

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> history;
  std::vector<double> dir(dim), alpha(static_cast<std::size_t>(config.memory));

  auto finish = [&](bool converged, std::string status) {
    result.x = x;
    result.value = value;
    result.grad_inf_norm = inf_norm(grad);
    result.converged = converged;
    result.status = std::move(status);
    return result;
  };

  for (int iter = 1;; ++iter) {
    const double gnorm = inf_norm(grad);
    if (gnorm <= config.tol) return finish(true, "gradient tolerance reached");
    if (iter > config.max_iter) return finish(false, "iteration limit reached");

    // Two-loop recursion: dir = -H grad.
    for (std::size_t i = 0; i < dim; ++i) dir[i] = -grad[i];
    for (std::size_t h = history.size(); h-- > 0;) {
      alpha[h] = history[h].rho * dot(history[h].s, dir);
      for (std::size_t i = 0; i < dim; ++i) dir[i] -= alpha[h] * history[h].y[i];
    }
    if (!history.empty()) {
      const auto& last = history.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& d : dir) d *= gamma;
    }
    for (std::size_t h = 0; h < history.size(); ++h) {
      const double beta = history[h].rho * dot(history[h].y, dir);
      for (std::size_t i = 0; i < dim; ++i) dir[i] += (alpha[h] - beta) * history[h].s[i];
    }
    double slope = dot(grad, dir);
    if (!(slope < 0.0)) {
      // Lost descent (numerical noise in curvature pairs): restart.
      history.clear();
      for (std::size_t i = 0; i < dim; ++i) dir[i] = -grad[i];
      slope = dot(grad, dir);
    }
    double initial = 1.0;
    if (history.empty()) {
      double norm2 = std::sqrt(dot(dir, dir));
      initial = norm2 > 0.0 ? std::min(1.0, 1.0 / norm2) : 1.0;
    }

    LineSearch search(f, config, x, value, dir, slope);
    Point next;
    const bool ok = search.run(initial, next);
    result.evaluations += search.evaluations();
    if (!ok && next.x.empty()) return finish(false, "line search failed to decrease the objective");
    if (!std::isfinite(next.value)) fail(ErrorKind::kNumeric, "objective became non-finite during line search");

    Pair pair;
    pair.s.resize(dim);
    pair.y.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      pair.s[i] = next.x[i] - x[i];
      pair.y[i] = next.grad[i] - grad[i];
    }
    const double sy = dot(pair.s, pair.y);
    x = std::move(next.x);
    grad = std::move(next.grad);
    const double previous = value;
    value = next.value;
    result.trace.push_back(value);
    result.iterations = iter;
    if (sy > 1e-12 * std::sqrt(dot(pair.y, pair.y)) * std::sqrt(dot(pair.s, pair.s))) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (static_cast<int>(history.size()) > config.memory) history.pop_front();
    }
    if (callback) callback({iter, value, inf_norm(grad), next.step, result.evaluations}, x);
    if (!ok && previous - value <= 1e-15 * std::max(1.0, std::fabs(value))) {
      return finish(false, "line search stalled");
    }
  }
}

}  // namespace xlner
