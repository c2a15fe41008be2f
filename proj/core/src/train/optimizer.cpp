#include "dair/train/optimizer.hpp"

#include <cmath>
#include <string>

#include "dair/errors.hpp"

namespace dair::train {

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kGd: return "gd";
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdam: return "adam";
  }
  return "?";
}

OptimizerKind parse_optimizer(std::string_view text) {
  for (OptimizerKind k : {OptimizerKind::kGd, OptimizerKind::kSgd, OptimizerKind::kAdam}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown optimizer '" + std::string(text) + "'");
}

Optimizer::Optimizer(OptimizerKind kind, AdamSettings adam) : kind_(kind), adam_(adam) {}

void Optimizer::step(ad::ParamSet& params, const ad::ParamSet& grad, double lr) {
  ++t_;
  if (kind_ != OptimizerKind::kAdam) {
    for (std::size_t g = 0; g < params.group_count(); ++g) {
      ad::Tensor& p = params.mutable_at(g);
      const ad::Tensor& d = grad.at(g);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * d[i];
    }
    return;
  }
  const std::size_t total = params.total_size();
  if (m_.size() != total) {
    m_.assign(total, 0.0);
    v_.assign(total, 0.0);
  }
  const double c1 = 1.0 - std::pow(adam_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(adam_.beta2, static_cast<double>(t_));
  std::size_t k = 0;
  for (std::size_t g = 0; g < params.group_count(); ++g) {
    ad::Tensor& p = params.mutable_at(g);
    const ad::Tensor& d = grad.at(g);
    for (std::size_t i = 0; i < p.size(); ++i, ++k) {
      m_[k] = adam_.beta1 * m_[k] + (1 - adam_.beta1) * d[i];
      v_[k] = adam_.beta2 * v_[k] + (1 - adam_.beta2) * d[i] * d[i];
      p[i] -= lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + adam_.eps);
    }
  }
}

}  // namespace dair::train
