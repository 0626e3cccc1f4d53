#ifndef XLNER_LBFGS_HPP_
#define XLNER_LBFGS_HPP_

#include <functional>
#include <string>
#include <vector>

namespace xlner {

struct LbfgsConfig {
  int memory = 10;
  double tol = 1e-5;  // on the infinity norm of the gradient
  int max_iter = 500;
  int max_line_search = 40;
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature (strong Wolfe)
};

// Fills grad and returns the value to minimize.
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

struct LbfgsIteration {
  int iteration = 0;
  double value = 0.0;
  double grad_inf_norm = 0.0;
  double step = 0.0;
  int evaluations = 0;
};

using LbfgsCallback = std::function<void(const LbfgsIteration&, const std::vector<double>& x)>;

struct LbfgsResult {
  std::vector<double> x;  // best iterate seen
  double value = 0.0;
  double grad_inf_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string status;
  std::vector<double> trace;  // objective after each accepted step, starting with x0
};

// Limited-memory BFGS: two-loop recursion for the search direction, a
// strong-Wolfe line search (bracketing + cubic zoom) for the step.
// Throws ErrorKind::kNumeric when the objective is not finite at x0 or at
// an accepted point.
LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double> x0, const LbfgsConfig& config,
                           const LbfgsCallback& callback = {});

}  // namespace xlner

#endif  // XLNER_LBFGS_HPP_
