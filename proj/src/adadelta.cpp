#include "xlner/adadelta.hpp"

#include <cmath>
#include <string>

#include "xlner/error.hpp"

namespace xlner {

void adadelta_step(RealBuffer& params, const RealBuffer& grad, AdaDeltaState& state,
                   const AdaDeltaConfig& config) {
  const std::size_t n = params.size();
  if (grad.size() != n) fail(ErrorKind::kUsage, "gradient and parameter sizes differ");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(static_cast<double>(grad[j]))) {
      fail(ErrorKind::kNumeric, "non-finite gradient at coordinate " + std::to_string(j));
    }
  }
  if (state.accum_grad.empty()) state.accum_grad.assign(n, 0.0);
  if (state.accum_update.empty()) state.accum_update.assign(n, 0.0);
  if (state.accum_grad.size() != n || state.accum_update.size() != n) {
    fail(ErrorKind::kUsage, "optimizer state does not match parameter count");
  }
  const double rho = config.rho;
  const double eps = config.epsilon;
  for (std::size_t j = 0; j < n; ++j) {
    const double g = static_cast<double>(grad[j]);
    double& eg = state.accum_grad[j];
    double& ex = state.accum_update[j];
    eg = rho * eg + (1.0 - rho) * g * g;
    const double dx = -std::sqrt(ex + eps) / std::sqrt(eg + eps) * g;
    ex = rho * ex + (1.0 - rho) * dx * dx;
    params[j] += static_cast<Real>(config.learning_rate * dx);
  }
}

}  // namespace xlner
