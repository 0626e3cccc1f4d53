#ifndef XLNER_ADADELTA_HPP_
#define XLNER_ADADELTA_HPP_

#include <vector>

#include "xlner/tensor.hpp"

namespace xlner {

struct AdaDeltaConfig {
  double rho = 0.95;
  double epsilon = 1e-6;
  double learning_rate = 1.0;
};

// Decaying averages of squared gradients and squared updates, one entry per
// parameter.
struct AdaDeltaState {
  std::vector<double> accum_grad;
  std::vector<double> accum_update;
};

//   E[g^2] <- rho E[g^2] + (1 - rho) g^2
//   dx      = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
//   x      <- x + lr * dx
// Empty state is treated as zeros. Throws kNumeric on a non-finite gradient
// before touching params or state.
void adadelta_step(RealBuffer& params, const RealBuffer& grad, AdaDeltaState& state,
                   const AdaDeltaConfig& config);

}  // namespace xlner

#endif  // XLNER_ADADELTA_HPP_
