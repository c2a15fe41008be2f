#include "dair/objectives.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "dair/errors.hpp"

namespace dair {
namespace {

using ad::BackwardArgs;
using ad::Tensor;

// sqrt(l) is floored at 1e-12, i.e. l at 1e-24.
constexpr double kSqrtFloor = 1e-24;
constexpr double kLogFloor = 1e-12;

std::size_t scalar_rows(const char* op, const Var& prediction, std::size_t n_targets) {
  const ad::Shape& s = prediction.shape();
  const bool ok = (s.size() == 1) || (s.size() == 2 && s[1] == 1);
  if (!ok || s[0] != n_targets) {
    throw ShapeError(std::string(op) + ": prediction " + ad::shape_to_string(s) + " does not match " +
                     std::to_string(n_targets) + " scalar targets");
  }
  return s[0];
}

// Elementwise loss of a scalar prediction against a fixed target.
template <class F, class DF>
Var pointwise_loss(const char* op, Var prediction, std::span<const double> targets, F f, DF df) {
  const std::size_t n = scalar_rows(op, prediction, targets.size());
  std::vector<double> t(targets.begin(), targets.end());
  Tensor y = Tensor::zeros({n});
  const Tensor& p = prediction.value();
  for (std::size_t i = 0; i < n; ++i) y[i] = f(p[i], t[i]);
  std::array<Var, 1> in{prediction};
  return ad::record_op(op, std::move(y), in, [t = std::move(t), df](const BackwardArgs& a) {
    Tensor* d = a.in_grads[0];
    if (d == nullptr) return;
    const Tensor& p = *a.inputs[0];
    for (std::size_t i = 0; i < t.size(); ++i) (*d)[i] += a.out_grad[i] * df(p[i], t[i]);
  });
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus_value(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void require_nonnegative(const char* op, const Var& v) {
  for (double x : v.value().values()) {
    if (!(x >= 0.0)) throw DomainError(std::string(op) + ": losses must be nonnegative, got " + std::to_string(x));
  }
}

void require_nonnegative(const char* op, double l, double lt) {
  if (!(l >= 0.0) || !(lt >= 0.0)) {
    throw DomainError(std::string(op) + ": losses must be nonnegative, got (" + std::to_string(l) + ", " +
                      std::to_string(lt) + ")");
  }
}

Var rows(Var x, std::span<const std::size_t> idx) {
  if (x.shape().size() != 2) return ad::gather(x, idx);
  const std::size_t k = x.shape()[1];
  std::vector<std::size_t> flat;
  flat.reserve(idx.size() * k);
  for (std::size_t i : idx) {
    for (std::size_t c = 0; c < k; ++c) flat.push_back(i * k + c);
  }
  return ad::reshape(ad::gather(x, flat), {idx.size(), k});
}

Var pair_regularizer(const ObjectiveSpec& spec, Var l, Var lt, const std::optional<Var>& q, const std::optional<Var>& qt) {
  switch (spec.regularizer.kind) {
    case RegularizerKind::kSq:
      return reg_sq(l, lt);
    case RegularizerKind::kL1:
      return reg_l1(l, lt);
    case RegularizerKind::kKlOutput:
    case RegularizerKind::kL2Output:
      if (!q || !qt) throw DomainError("composite_objective: output regularizer needs both output distributions");
      return output_consistency(spec.regularizer.kind, *q, *qt);
    case RegularizerKind::kNone:
      break;
  }
  throw DomainError("composite_objective: no regularizer selected");
}

}  // namespace

void LossSpec::validate() const {
  if (kind == LossKind::kHuber && !(delta > 0.0 && std::isfinite(delta))) {
    throw DomainError("huber loss needs delta > 0, got " + std::to_string(delta));
  }
  if (kind == LossKind::kTilted && !(tilt != 0.0 && std::isfinite(tilt))) {
    throw DomainError("tilted loss needs a finite nonzero tilt");
  }
}

void ObjectiveSpec::validate() const {
  loss.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw DomainError("lambda must be finite and nonnegative, got " + std::to_string(lambda));
  }
  if (mode == Mode::kDair && regularizer.on_outputs() && !loss.is_classification()) {
    throw DomainError(std::string(to_string(regularizer.kind)) + " regularizer needs a model emitting an output distribution");
  }
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kSquared: return "squared";
    case LossKind::kLogisticBinary: return "logistic";
    case LossKind::kCrossEntropy: return "cross-entropy";
    case LossKind::kHuber: return "huber";
    case LossKind::kTilted: return "tilted";
  }
  return "?";
}

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::kNone: return "none";
    case RegularizerKind::kSq: return "sq";
    case RegularizerKind::kL1: return "l1";
    case RegularizerKind::kKlOutput: return "kl";
    case RegularizerKind::kL2Output: return "l2";
  }
  return "?";
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kErm: return "erm";
    case Mode::kDaErm: return "da-erm";
    case Mode::kDair: return "dair";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view text) {
  for (LossKind k : {LossKind::kSquared, LossKind::kLogisticBinary, LossKind::kCrossEntropy, LossKind::kHuber,
                     LossKind::kTilted}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown loss kind '" + std::string(text) + "'");
}

RegularizerKind parse_regularizer_kind(std::string_view text) {
  for (RegularizerKind k : {RegularizerKind::kNone, RegularizerKind::kSq, RegularizerKind::kL1,
                            RegularizerKind::kKlOutput, RegularizerKind::kL2Output}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown regularizer '" + std::string(text) + "'");
}

Mode parse_mode(std::string_view text) {
  for (Mode m : {Mode::kErm, Mode::kDaErm, Mode::kDair}) {
    if (to_string(m) == text) return m;
  }
  throw ConfigError("unknown mode '" + std::string(text) + "'");
}

Var per_sample_loss(const LossSpec& spec, Var prediction, std::span<const double> targets) {
  spec.validate();
  switch (spec.kind) {
    case LossKind::kSquared:
    case LossKind::kTilted:
      return pointwise_loss(
          "squared_loss", prediction, targets, [](double p, double t) { return (p - t) * (p - t); },
          [](double p, double t) { return 2.0 * (p - t); });
    case LossKind::kHuber: {
      const double d = spec.delta;
      return pointwise_loss(
          "huber_loss", prediction, targets,
          [d](double p, double t) {
            const double r = std::abs(p - t);
            return r <= d ? 0.5 * r * r : d * (r - 0.5 * d);
          },
          [d](double p, double t) { return std::clamp(p - t, -d, d); });
    }
    case LossKind::kLogisticBinary:
      for (double t : targets) {
        if (t != 0.0 && t != 1.0) throw DomainError("logistic loss: labels must be 0 or 1, got " + std::to_string(t));
      }
      return pointwise_loss(
          "logistic_loss", prediction, targets,
          [](double z, double y) { return softplus_value(-(2.0 * y - 1.0) * z); },
          [](double z, double y) {
            const double s = 2.0 * y - 1.0;
            return -s * sigmoid(-s * z);
          });
    case LossKind::kCrossEntropy: {
      if (prediction.shape().size() != 2) {
        throw ShapeError("cross_entropy: logits must be [N,K], got " + ad::shape_to_string(prediction.shape()));
      }
      const std::size_t k = prediction.shape()[1];
      std::vector<std::size_t> labels(targets.size());
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const double t = targets[i];
        if (!(t >= 0.0) || t != std::floor(t) || t >= static_cast<double>(k)) {
          throw DomainError("cross_entropy: class index " + std::to_string(t) + " out of range for K=" +
                            std::to_string(k));
        }
        labels[i] = static_cast<std::size_t>(t);
      }
      return ad::scale(ad::pick(ad::log_softmax(prediction), labels), -1.0);
    }
  }
  throw DomainError("unknown loss kind");
}

Var aggregate_loss(const LossSpec& spec, Var losses) {
  if (spec.kind == LossKind::kTilted) {
    spec.validate();
    return ad::scale(ad::log_mean_exp(ad::scale(losses, spec.tilt)), 1.0 / spec.tilt);
  }
  return ad::mean(losses);
}

Var base_loss(const LossSpec& spec, Var prediction, std::span<const double> targets) {
  return aggregate_loss(spec, per_sample_loss(spec, prediction, targets));
}

Var reg_sq(Var l, Var lt) {
  require_nonnegative("reg_sq", l);
  require_nonnegative("reg_sq", lt);
  Var d = ad::sqrt(ad::clamp_min(l, kSqrtFloor)) - ad::sqrt(ad::clamp_min(lt, kSqrtFloor));
  return d * d;
}

Var reg_l1(Var l, Var lt) {
  require_nonnegative("reg_l1", l);
  require_nonnegative("reg_l1", lt);
  return ad::abs(l - lt);
}

Var output_consistency(RegularizerKind kind, Var q, Var qt) {
  if (q.shape() != qt.shape() || q.shape().size() != 2) {
    throw ShapeError("output_consistency: distributions " + ad::shape_to_string(q.shape()) + " and " +
                     ad::shape_to_string(qt.shape()) + " differ or are not [N,K]");
  }
  switch (kind) {
    case RegularizerKind::kKlOutput:
      return ad::sum_rows(q * (ad::log(ad::clamp_min(q, kLogFloor)) - ad::log(ad::clamp_min(qt, kLogFloor))));
    case RegularizerKind::kL2Output: {
      Var d = q - qt;
      return ad::sum_rows(d * d);
    }
    default:
      throw DomainError("output_consistency: kind must be kl or l2");
  }
}

Var probabilities(Var logits) {
  const ad::Shape& s = logits.shape();
  if (s.size() == 2 && s[1] >= 2) return ad::exp(ad::log_softmax(logits));
  const std::size_t n = scalar_rows("probabilities", logits, s[0]);
  Tensor y = Tensor::zeros({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    const double p = sigmoid(logits.value()[i]);
    y[2 * i] = 1.0 - p;
    y[2 * i + 1] = p;
  }
  std::array<Var, 1> in{logits};
  return ad::record_op("binary_probabilities", std::move(y), in, [n](const BackwardArgs& a) {
    Tensor* d = a.in_grads[0];
    if (d == nullptr) return;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = a.output[2 * i + 1];
      (*d)[i] += p * (1.0 - p) * (a.out_grad[2 * i + 1] - a.out_grad[2 * i]);
    }
  });
}

Var composite_objective(const ObjectiveSpec& spec, Var l, std::optional<Var> lt, std::optional<Var> q,
                        std::optional<Var> qt) {
  spec.validate();
  if (spec.mode == Mode::kErm) return l;
  if (!lt) {
    throw DomainError(std::string(to_string(spec.mode)) +
                      " objective needs the augmented branch; use erm for samples without a twin");
  }
  Var base = ad::scale(l, 0.5) + ad::scale(*lt, 0.5);
  if (!spec.regularized()) return base;
  return base + ad::scale(pair_regularizer(spec, l, *lt, q, qt), spec.lambda);
}

Var batch_objective(const ObjectiveSpec& spec, const BranchOutputs& original,
                    const std::optional<BranchOutputs>& augmented, std::span<const std::size_t> paired) {
  spec.validate();
  const std::size_t n = original.losses.value().size();
  if (spec.mode == Mode::kErm || !augmented || paired.empty()) return aggregate_loss(spec.loss, original.losses);

  if (augmented->losses.value().size() != paired.size()) {
    throw ShapeError("batch_objective: " + std::to_string(augmented->losses.value().size()) +
                     " augmented losses for " + std::to_string(paired.size()) + " pairs");
  }
  std::vector<std::uint8_t> is_paired(n, 0);
  for (std::size_t i : paired) {
    if (i >= n || is_paired[i]) throw DomainError("batch_objective: pairing index invalid or repeated");
    is_paired[i] = 1;
  }
  const bool full = paired.size() == n && std::is_sorted(paired.begin(), paired.end());
  Var l_pair = full ? original.losses : ad::gather(original.losses, paired);
  std::optional<Var> q_pair;
  if (original.probs) q_pair = full ? *original.probs : rows(*original.probs, paired);

  if (spec.loss.kind == LossKind::kTilted) {
    Var obj = aggregate_loss(spec.loss, ad::concat(original.losses, augmented->losses));
    if (!spec.regularized()) return obj;
    return obj + ad::scale(ad::mean(pair_regularizer(spec, l_pair, augmented->losses, q_pair, augmented->probs)),
                           spec.lambda);
  }

  Var total = ad::sum(composite_objective(spec, l_pair, augmented->losses, q_pair, augmented->probs));
  if (!full) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
      if (!is_paired[i]) rest.push_back(i);
    }
    if (!rest.empty()) total = total + ad::sum(ad::gather(original.losses, rest));
  }
  return ad::scale(total, 1.0 / static_cast<double>(n));
}

double reg_sq_value(double l, double lt) {
  require_nonnegative("reg_sq", l, lt);
  const double d = std::sqrt(std::max(l, kSqrtFloor)) - std::sqrt(std::max(lt, kSqrtFloor));
  return d * d;
}

double reg_l1_value(double l, double lt) {
  require_nonnegative("reg_l1", l, lt);
  return std::abs(l - lt);
}

double reg_gap(double l, double lt) {
  require_nonnegative("reg_gap", l, lt);
  return 2.0 * std::sqrt(std::min(l, lt)) * std::abs(std::sqrt(lt) - std::sqrt(l));
}

std::optional<double> consistency_metric(std::span<const std::uint8_t> correct_original,
                                         std::span<const std::uint8_t> correct_augmented) {
  if (correct_original.size() != correct_augmented.size()) {
    throw ShapeError("consistency_metric: " + std::to_string(correct_original.size()) + " original vs " +
                     std::to_string(correct_augmented.size()) + " augmented entries");
  }
  std::size_t support = 0, hits = 0;
  for (std::size_t i = 0; i < correct_original.size(); ++i) {
    if (correct_original[i]) {
      ++support;
      if (correct_augmented[i]) ++hits;
    }
  }
  if (support == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(support);
}

}  // namespace dair
