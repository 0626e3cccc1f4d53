#include "xlner/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "xlner/rng.hpp"

namespace xlner {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-5});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport grad_check(ParameterStore& store, const LossFunction& loss, const GradCheckConfig& config) {
  RealBuffer analytic(store.size(), Real(0));
  loss(&analytic);

  // Coordinates of each group, groups in first-registration order.
  std::vector<std::string> groups;
  std::map<std::string, std::vector<std::size_t>> coords;
  std::vector<const TensorInfo*> owner(store.size(), nullptr);
  for (const auto& t : store.tensors()) {
    if (!coords.count(t.group)) groups.push_back(t.group);
    auto& list = coords[t.group];
    for (std::size_t j = 0; j < t.size(); ++j) {
      list.push_back(t.offset + j);
      owner[t.offset + j] = &t;
    }
  }

  SplitMix64 rng(derive_seed(config.seed, 0x6772));
  GradCheckReport report;
  report.epsilon = config.epsilon;
  report.max_rel_err = -1.0;
  auto& values = store.values();
  for (const auto& group : groups) {
    auto candidates = coords[group];
    if (static_cast<int>(candidates.size()) > config.coordinates_per_group) {
      shuffle(candidates, rng);
      candidates.resize(static_cast<std::size_t>(config.coordinates_per_group));
      std::sort(candidates.begin(), candidates.end());
    }
    GroupError ge;
    ge.group = group;
    ge.max_rel_err = -1.0;
    for (std::size_t c : candidates) {
      const Real saved = values[c];
      values[c] = static_cast<Real>(static_cast<double>(saved) + config.epsilon);
      const double up = loss(nullptr);
      values[c] = static_cast<Real>(static_cast<double>(saved) - config.epsilon);
      const double down = loss(nullptr);
      values[c] = saved;
      const double numeric = (up - down) / (2.0 * config.epsilon);
      double a = static_cast<double>(analytic[c]);
      if (group == config.corrupt_group) a += 0.5 * std::abs(a) + 0.1;
      const double rel = relative_error(a, numeric);
      ++ge.checked;
      ge.max_abs_err = std::max(ge.max_abs_err, std::abs(a - numeric));
      if (rel > ge.max_rel_err) {
        ge.max_rel_err = rel;
        ge.worst_coordinate = c;
      }
    }
    if (ge.checked == 0) ge.max_rel_err = 0.0;
    if (ge.checked > 0 && ge.max_rel_err > report.max_rel_err) {
      report.max_rel_err = ge.max_rel_err;
      report.worst_coordinate = ge.worst_coordinate;
      report.worst_group = group;
      report.worst_tensor = owner[ge.worst_coordinate]->name;
    }
    report.per_group_errors.push_back(ge);
  }
  if (report.max_rel_err < 0.0) report.max_rel_err = 0.0;
  return report;
}

GradCheckReport grad_check(NeuralModel& model, const std::vector<WeightedSentence>& batch,
                           const GradCheckConfig& config) {
  const LossFunction loss = [&](RealBuffer* grad) {
    return grad ? model.loss_and_gradients(batch, *grad) : model.loss(batch);
  };
  return grad_check(model.params(), loss, config);
}

EpsilonSweep epsilon_sweep(NeuralModel& model, const std::vector<WeightedSentence>& batch,
                           const std::vector<double>& epsilons, GradCheckConfig config) {
  EpsilonSweep sweep;
  for (double eps : epsilons) {
    config.epsilon = eps;
    const auto report = grad_check(model, batch, config);
    SweepPoint p;
    p.epsilon = eps;
    p.max_rel_err = report.max_rel_err;
    for (const auto& g : report.per_group_errors) p.max_abs_err = std::max(p.max_abs_err, g.max_abs_err);
    sweep.points.push_back(p);
  }
  for (std::size_t i = 1; i < sweep.points.size(); ++i) {
    if (sweep.points[i].max_abs_err < sweep.points[sweep.best].max_abs_err) sweep.best = i;
  }
  return sweep;
}

std::string format_grad_check(const GradCheckReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-22s %8s %14s %14s\n", "group", "checked", "max_rel_err", "max_abs_err");
  out += line;
  for (const auto& g : report.per_group_errors) {
    std::snprintf(line, sizeof line, "%-22s %8d %14.3e %14.3e\n", g.group.c_str(), g.checked, g.max_rel_err,
                  g.max_abs_err);
    out += line;
  }
  std::snprintf(line, sizeof line, "epsilon %.1e  max_rel_err %.3e  worst %s[%zu] (%s)\n", report.epsilon,
                report.max_rel_err, report.worst_tensor.c_str(), report.worst_coordinate, report.worst_group.c_str());
  out += line;
  return out;
}

}  // namespace xlner
