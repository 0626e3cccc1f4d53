#ifndef XLNER_GRADCHECK_HPP_
#define XLNER_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xlner/neural.hpp"
#include "xlner/tensor.hpp"

namespace xlner {

struct GradCheckConfig {
  double epsilon = 1e-4;
  int coordinates_per_group = 30;  // all coordinates when the group is smaller
  std::uint64_t seed = 1;
  // Test hook: perturbs the analytic gradient of this group before comparing.
  std::string corrupt_group;
};

struct GroupError {
  std::string group;
  int checked = 0;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::size_t worst_coordinate = 0;
};

struct GradCheckReport {
  double epsilon = 0.0;
  double max_rel_err = 0.0;
  std::size_t worst_coordinate = 0;  // flat index into the parameter store
  std::string worst_tensor;
  std::string worst_group;
  std::vector<GroupError> per_group_errors;  // in registration order
};

// |analytic - numeric| / max(|analytic|, |numeric|, 1e-5); the floor keeps
// coordinates whose true gradient is exactly zero from dividing by noise.
double relative_error(double analytic, double numeric);

// Evaluates the loss at the store's current values; fills grad when non-null.
using LossFunction = std::function<double(RealBuffer* grad)>;

GradCheckReport grad_check(ParameterStore& store, const LossFunction& loss, const GradCheckConfig& config);
GradCheckReport grad_check(NeuralModel& model, const std::vector<WeightedSentence>& batch,
                           const GradCheckConfig& config);

struct SweepPoint {
  double epsilon = 0.0;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
};

struct EpsilonSweep {
  std::vector<SweepPoint> points;
  std::size_t best = 0;  // index of the smallest max_abs_err
  // Error falls then rises across the sweep (minimum strictly inside).
  bool v_shaped() const { return best > 0 && best + 1 < points.size(); }
};

EpsilonSweep epsilon_sweep(NeuralModel& model, const std::vector<WeightedSentence>& batch,
                           const std::vector<double>& epsilons, GradCheckConfig config);

std::string format_grad_check(const GradCheckReport& report);

}  // namespace xlner

#endif  // XLNER_GRADCHECK_HPP_
