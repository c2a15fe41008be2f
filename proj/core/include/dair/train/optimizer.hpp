#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "dair/autodiff/param_set.hpp"

namespace dair::train {

enum class OptimizerKind { kGd, kSgd, kAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Applies one update in place. gd and sgd share the plain step
/// theta -= lr * g; adam keeps first/second moment estimates.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, AdamSettings adam = {});

  void step(ad::ParamSet& params, const ad::ParamSet& grad, double lr);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  OptimizerKind kind_;
  AdamSettings adam_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace dair::train
