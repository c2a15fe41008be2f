#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "dair/autodiff/param_set.hpp"
#include "dair/autodiff/tape.hpp"

namespace dair::ad {

// Builds a single-element objective on a tape bound to some ParamSet.
using ObjectiveFn = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double step = 1e-6;
  // Check only this many coordinates, spread over every parameter group and
  // chosen with `seed`. Unset means every coordinate.
  std::optional<std::size_t> max_coords;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  // ||autodiff - central|| / (||central|| + 1e-12) over the checked coordinates.
  double norm_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients against central differences.
/// Per coordinate: |autodiff - central| / (|central| + 1e-12); the result is
/// the maximum over checked coordinates (0 when there are none). The
/// norm-wise figure stays meaningful when some coordinates are so small that
/// central differences only resolve them to roundoff.
GradCheckResult grad_check(const ObjectiveFn& objective, const ParamSet& params, const GradCheckOptions& options);

inline double grad_check(const ObjectiveFn& objective, const ParamSet& params, double step) {
  return grad_check(objective, params, GradCheckOptions{step, std::nullopt, 0}).max_rel_error;
}

/// Objective value at `params`, no gradient.
double evaluate_objective(const ObjectiveFn& objective, const ParamSet& params);

}  // namespace dair::ad
