#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dair/autodiff/grad_check.hpp"
#include "dair/data/paired.hpp"
#include "dair/objectives.hpp"
#include "dair/train/model.hpp"
#include "dair/train/optimizer.hpp"

namespace dair::train {

/// Learning rate `lr` for epochs first..last (1-based, inclusive).
struct ScheduleSpan {
  std::size_t first = 1;
  std::size_t last = 1;
  double lr = 0.01;
};

struct TrainConfig {
  // Epochs in minibatch mode; iterations in full-batch mode.
  std::size_t epochs = 1;
  // 0 means full batch.
  std::size_t batch_size = 0;
  // Empty means `lr` throughout.
  std::vector<ScheduleSpan> schedule;
  double lr = 0.01;
  std::optional<double> grad_tolerance;
  std::size_t max_iterations = 100000;
  OptimizerKind optimizer = OptimizerKind::kGd;
  AdamSettings adam;
  std::uint64_t seed = 0;
  // Gradient-norm tracking period in minibatch mode.
  std::size_t grad_norm_every = 50;
  // Keep one StepRecord per update (otherwise only epoch summaries).
  bool record_steps = true;

  // Throws ConfigError when spans do not partition 1..epochs, a rate is not
  // positive, or the tolerance is not positive.
  void validate() const;
  double lr_at(std::size_t epoch) const;
  bool full_batch(std::size_t n) const { return batch_size == 0 || batch_size >= n; }
};

/// Diagnostics for one update. `base_mean` is the objective without the
/// lambda term; the regularizer means run over the pairs in the batch.
struct StepRecord {
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  double objective = 0.0;
  double base_mean = 0.0;
  double loss_original_mean = 0.0;
  double loss_augmented_mean = 0.0;
  double reg_sq_mean = 0.0;
  double reg_l1_mean = 0.0;
  std::optional<double> grad_norm;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double objective = 0.0;
  double base_mean = 0.0;
  double loss_original_mean = 0.0;
  double reg_sq_mean = 0.0;
  double reg_l1_mean = 0.0;
  std::optional<double> grad_norm;  // last tracked value within the epoch

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

struct TrainResult {
  ad::ParamSet params;
  TrainHistory history;
};

struct ConvergenceResult {
  ad::ParamSet params;
  // Updates performed before the gradient norm first fell below tolerance
  // (or the cap, when not converged).
  std::size_t iterations = 0;
  bool converged = false;
  double final_norm = 0.0;
  TrainHistory history;
};

/// Trains `model` on `data` for cfg.epochs. Samples without a twin contribute
/// plain loss terms. Non-finite objectives throw NumericError naming the
/// epoch and iteration.
TrainResult train(const ModelSpec& model, const ObjectiveSpec& objective, const data::PairedSource& data,
                  const TrainConfig& cfg);

/// Full-batch training until ||grad|| < cfg.grad_tolerance or
/// cfg.max_iterations updates.
ConvergenceResult train_to_tolerance(const ModelSpec& model, const ObjectiveSpec& objective,
                                     const data::PairedSource& data, const TrainConfig& cfg);

/// Minimises an arbitrary closure from `init`. Runs cfg.epochs updates, or
/// until tolerance when cfg.grad_tolerance is set.
ConvergenceResult minimize(const ad::ObjectiveFn& objective, ad::ParamSet init, const TrainConfig& cfg);

enum class Task { kAccuracy, kRmse };

/// Raw model outputs [N, output_width] for the originals (or twins) of `data`.
std::vector<double> predict(const ad::ParamSet& params, const ModelSpec& model, const data::PairedSource& data,
                            bool twins = false, std::size_t epoch = 0);

/// Per-sample 0/1 correctness (argmax, or sign of a single logit).
std::vector<std::uint8_t> correctness(const ad::ParamSet& params, const ModelSpec& model,
                                      const data::PairedSource& data, bool twins = false);

/// Accuracy or RMSE over the originals of `data`. Empty data -> DataError.
double evaluate(const ad::ParamSet& params, const ModelSpec& model, const data::PairedSource& data, Task task);

/// Consistency metric between originals and twins. Every sample must be
/// paired (DataError otherwise); nullopt when no original is correct.
std::optional<double> consistency_eval(const ad::ParamSet& params, const ModelSpec& model,
                                      const data::PairedSource& data);

}  // namespace dair::train
