#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dair/autodiff/ops.hpp"

namespace dair {

using ad::Var;

enum class LossKind { kSquared, kLogisticBinary, kCrossEntropy, kHuber, kTilted };

struct LossSpec {
  LossKind kind = LossKind::kSquared;
  double delta = 1.0;  // huber transition point
  double tilt = -2.0;  // tilted aggregation; per-sample loss is squared

  static LossSpec squared() { return {}; }
  static LossSpec logistic() { return {LossKind::kLogisticBinary}; }
  static LossSpec cross_entropy() { return {LossKind::kCrossEntropy}; }
  static LossSpec huber(double delta = 1.0) { return {LossKind::kHuber, delta}; }
  static LossSpec tilted(double t = -2.0) { return {LossKind::kTilted, 1.0, t}; }

  // Throws DomainError for delta <= 0 (huber) or t == 0 (tilted).
  void validate() const;
  bool is_classification() const { return kind == LossKind::kLogisticBinary || kind == LossKind::kCrossEntropy; }
};

enum class RegularizerKind { kNone, kSq, kL1, kKlOutput, kL2Output };

struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::kNone;

  bool on_outputs() const { return kind == RegularizerKind::kKlOutput || kind == RegularizerKind::kL2Output; }
};

enum class Mode { kErm, kDaErm, kDair };

struct ObjectiveSpec {
  LossSpec loss;
  RegularizerSpec regularizer;
  double lambda = 0.0;
  Mode mode = Mode::kErm;

  // Throws DomainError on negative/non-finite lambda, a bad LossSpec, or an
  // output regularizer paired with a loss that has no output distribution.
  void validate() const;
  bool uses_augmented() const { return mode != Mode::kErm; }
  bool regularized() const { return mode == Mode::kDair && lambda != 0.0 && regularizer.kind != RegularizerKind::kNone; }
};

std::string_view to_string(LossKind kind);
std::string_view to_string(RegularizerKind kind);
std::string_view to_string(Mode mode);
LossKind parse_loss_kind(std::string_view text);
RegularizerKind parse_regularizer_kind(std::string_view text);
Mode parse_mode(std::string_view text);

// ---- graph builders ----

/// Per-sample base losses -> [N]. `prediction` is [N] or [N,1] for the scalar
/// kinds (squared, huber, tilted, logistic on one logit) and [N,K] logits for
/// cross-entropy. Targets are real values, {0,1} for logistic, class indices
/// for cross-entropy (out of range -> DomainError).
Var per_sample_loss(const LossSpec& spec, Var prediction, std::span<const double> targets);

/// Batch aggregate of per-sample losses: the mean, or for the tilted kind
/// (1/t) log mean exp(t l_i).
Var aggregate_loss(const LossSpec& spec, Var losses);

/// aggregate_loss(per_sample_loss(...)).
Var base_loss(const LossSpec& spec, Var prediction, std::span<const double> targets);

/// (sqrt(l) - sqrt(lt))^2 elementwise, with each sqrt floored at 1e-12.
/// Negative losses -> DomainError.
Var reg_sq(Var l, Var lt);
/// |l - lt| elementwise.
Var reg_l1(Var l, Var lt);

/// Row-wise divergence between probability rows q, qt of shape [N,K] -> [N].
/// kl: sum q (log q - log qt) with logs floored at 1e-12. l2: sum (q - qt)^2.
Var output_consistency(RegularizerKind kind, Var q, Var qt);

/// Softmax rows for [N,K] logits with K >= 2; a single logit column becomes
/// the two-class distribution [1 - sigmoid(z), sigmoid(z)].
Var probabilities(Var logits);

/// Elementwise composite over pairs: erm -> l; da-erm -> (l + lt)/2;
/// dair -> (l + lt)/2 + lambda R. Output regularizers need q and qt.
Var composite_objective(const ObjectiveSpec& spec, Var l, std::optional<Var> lt, std::optional<Var> q = std::nullopt,
                        std::optional<Var> qt = std::nullopt);

/// One branch of a minibatch as seen by the objective.
struct BranchOutputs {
  Var losses;                // [n] per-sample base losses
  std::optional<Var> probs;  // [n,K], needed by output regularizers
};

/// Batch objective. `paired[j]` is the position in `original` whose twin is
/// `augmented` row j. Unpaired samples contribute their plain loss. For the
/// non-tilted losses the value is
///   (sum_unpaired l_i + sum_pairs [(l_i + lt_i)/2 + lambda R_i]) / n.
/// For the tilted loss the tilt runs over the pooled original and augmented
/// losses and lambda * mean_pairs(R) is added afterwards.
Var batch_objective(const ObjectiveSpec& spec, const BranchOutputs& original, const std::optional<BranchOutputs>& augmented,
                    std::span<const std::size_t> paired);

// ---- plain-value helpers ----

double reg_sq_value(double l, double lt);
double reg_l1_value(double l, double lt);
/// 2 sqrt(min(l, lt)) |sqrt(lt) - sqrt(l)|, which equals reg_l1 - reg_sq.
double reg_gap(double l, double lt);

/// Fraction of pairs with a correct augmented prediction among pairs whose
/// original prediction is correct; nullopt when no original is correct.
std::optional<double> consistency_metric(std::span<const std::uint8_t> correct_original,
                                         std::span<const std::uint8_t> correct_augmented);

}  // namespace dair
