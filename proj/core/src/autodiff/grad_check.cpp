#include "dair/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dair/errors.hpp"

namespace dair::ad {
namespace {

std::vector<std::size_t> choose_coordinates(const ParamSet& params, const GradCheckOptions& options) {
  const std::size_t total = params.total_size();
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (!options.max_coords || *options.max_coords >= total) return all;

  // At least one coordinate from every group, the rest uniformly.
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> picked;
  std::size_t offset = 0;
  for (const auto& e : params.entries()) {
    std::uniform_int_distribution<std::size_t> in_group(0, e.value.size() - 1);
    picked.push_back(offset + in_group(rng));
    offset += e.value.size();
  }
  std::shuffle(all.begin(), all.end(), rng);
  for (std::size_t idx : all) {
    if (picked.size() >= *options.max_coords) break;
    if (std::find(picked.begin(), picked.end(), idx) == picked.end()) picked.push_back(idx);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace

double evaluate_objective(const ObjectiveFn& objective, const ParamSet& params) {
  Tape tape(params);
  Var out = objective(tape);
  return out.value().item();
}

GradCheckResult grad_check(const ObjectiveFn& objective, const ParamSet& params, const GradCheckOptions& options) {
  if (!(options.step > 0.0 && options.step <= 1e-3)) {
    throw DomainError("grad_check: step must lie in (0, 1e-3], got " + std::to_string(options.step));
  }
  GradCheckResult result;
  if (params.total_size() == 0) return result;

  Tape tape(params);
  Var out = objective(tape);
  const std::vector<double> analytic = backward(tape, out, params).flatten();

  ParamSet probe = params;
  double diff_sq = 0.0, ref_sq = 0.0;
  for (std::size_t idx : choose_coordinates(params, options)) {
    const double original = params.flat_value(idx);
    probe.set_flat_value(idx, original + options.step);
    const double plus = evaluate_objective(objective, probe);
    probe.set_flat_value(idx, original - options.step);
    const double minus = evaluate_objective(objective, probe);
    probe.set_flat_value(idx, original);
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("grad_check: objective not finite when perturbing parameter index " + std::to_string(idx));
    }
    const double central = (plus - minus) / (2.0 * options.step);
    double rel = std::fabs(analytic[idx] - central) / (std::fabs(central) + 1e-12);
    if (std::isnan(rel)) rel = std::numeric_limits<double>::infinity();
    diff_sq += (analytic[idx] - central) * (analytic[idx] - central);
    ref_sq += central * central;
    ++result.checked;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = idx;
    }
  }
  if (result.checked > 0) {
    result.norm_rel_error = std::sqrt(diff_sq) / (std::sqrt(ref_sq) + 1e-12);
    if (std::isnan(result.norm_rel_error)) result.norm_rel_error = std::numeric_limits<double>::infinity();
  }
  return result;
}

}  // namespace dair::ad
