#include "dair/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dair/errors.hpp"
#include "dair/rng.hpp"

namespace dair::train {
namespace {

using ad::Tensor;
using ad::Var;

constexpr std::size_t kEvalChunk = 256;

ad::Shape batch_shape(std::size_t n, const ad::Shape& feature) {
  ad::Shape s{n};
  s.insert(s.end(), feature.begin(), feature.end());
  return s;
}

Var gather_rows(Var x, std::size_t first, std::size_t count) {
  const std::size_t k = x.shape().size() == 2 ? x.shape()[1] : 1;
  std::vector<std::size_t> idx(count * k);
  std::iota(idx.begin(), idx.end(), first * k);
  Var g = ad::gather(x, idx);
  return x.shape().size() == 2 ? ad::reshape(g, {count, k}) : g;
}

// One minibatch laid out as [originals; twins].
struct Batch {
  Tensor x;
  std::vector<double> targets;
  std::vector<std::size_t> paired;  // positions among the originals
  std::size_t n = 0;
  std::size_t m = 0;
};

Batch assemble(const data::PairedSource& data, std::span<const std::size_t> idx, bool with_twins, std::size_t epoch) {
  Batch b;
  b.n = idx.size();
  if (with_twins) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (data.has_twin(idx[j])) b.paired.push_back(j);
    }
  }
  b.m = b.paired.size();
  const std::size_t f = data.feature_size();
  b.x = Tensor::zeros(batch_shape(b.n + b.m, data.feature_shape()));
  b.targets.resize(b.n + b.m);
  double* out = b.x.data();
  for (std::size_t j = 0; j < b.n; ++j) {
    data.write_original(idx[j], std::span<double>(out + j * f, f));
    b.targets[j] = data.label(idx[j]);
  }
  for (std::size_t r = 0; r < b.m; ++r) {
    const std::size_t i = idx[b.paired[r]];
    data.write_augmented(i, epoch, std::span<double>(out + (b.n + r) * f, f));
    b.targets[b.n + r] = data.label(i);
  }
  return b;
}

struct StepOutcome {
  double objective = 0.0;
  ad::ParamSet grad;
  StepRecord record;
};

StepOutcome batch_step(const ModelSpec& model, const ObjectiveSpec& spec, const ad::ParamSet& params, const Batch& b) {
  ad::Tape tape(params);
  Var out = apply_model(model, tape, tape.constant(b.x));
  Var losses = per_sample_loss(spec.loss, out, b.targets);

  const bool twins = b.m > 0;
  const bool need_probs = spec.regularized() && spec.regularizer.on_outputs();
  std::optional<Var> probs;
  if (need_probs) probs = probabilities(out);

  BranchOutputs orig{twins ? gather_rows(losses, 0, b.n) : losses, std::nullopt};
  std::optional<BranchOutputs> aug;
  if (twins) {
    aug = BranchOutputs{gather_rows(losses, b.n, b.m), std::nullopt};
    if (probs) {
      orig.probs = gather_rows(*probs, 0, b.n);
      aug->probs = gather_rows(*probs, b.n, b.m);
    }
  }
  Var obj = batch_objective(spec, orig, aug, b.paired);

  StepOutcome s;
  s.objective = obj.value().item();
  s.record.objective = s.objective;
  if (!std::isfinite(s.objective)) return s;
  s.grad = ad::backward(tape, obj, params);

  const Tensor& lv = losses.value();
  double sum_o = 0.0, base = 0.0, sum_a = 0.0, rsq = 0.0, rl1 = 0.0;
  std::vector<std::uint8_t> is_paired(b.n, 0);
  for (std::size_t r = 0; r < b.m; ++r) {
    const double l = lv[b.paired[r]], lt = lv[b.n + r];
    is_paired[b.paired[r]] = 1;
    sum_a += lt;
    base += 0.5 * (l + lt);
    rsq += reg_sq_value(l, lt);
    rl1 += reg_l1_value(l, lt);
  }
  for (std::size_t j = 0; j < b.n; ++j) {
    sum_o += lv[j];
    if (!is_paired[j]) base += lv[j];
  }
  const double n = static_cast<double>(b.n);
  s.record.loss_original_mean = sum_o / n;
  s.record.base_mean = base / n;
  if (b.m > 0) {
    const double m = static_cast<double>(b.m);
    s.record.loss_augmented_mean = sum_a / m;
    s.record.reg_sq_mean = rsq / m;
    s.record.reg_l1_mean = rl1 / m;
  }
  return s;
}

[[noreturn]] void non_finite(std::size_t epoch, std::size_t iteration, double value) {
  throw NumericError("non-finite objective (" + std::to_string(value) + ") at epoch " + std::to_string(epoch) +
                     ", iteration " + std::to_string(iteration));
}

void require_data(const ObjectiveSpec& spec, const data::PairedSource& data) {
  spec.validate();
  if (data.size() == 0) throw DataError("training set is empty");
  if (spec.uses_augmented() && data.paired_count() == 0 && spec.mode == Mode::kDair) {
    throw DataError("dair training needs at least one augmented twin");
  }
}

EpochRecord summarize(std::size_t epoch, double lr, std::span<const StepRecord> steps,
                      std::span<const double> weights) {
  EpochRecord e;
  e.epoch = epoch;
  e.lr = lr;
  double w = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const StepRecord& s = steps[i];
    e.objective += weights[i] * s.objective;
    e.base_mean += weights[i] * s.base_mean;
    e.loss_original_mean += weights[i] * s.loss_original_mean;
    e.reg_sq_mean += weights[i] * s.reg_sq_mean;
    e.reg_l1_mean += weights[i] * s.reg_l1_mean;
    w += weights[i];
    if (s.grad_norm) e.grad_norm = s.grad_norm;
  }
  if (w > 0) {
    e.objective /= w;
    e.base_mean /= w;
    e.loss_original_mean /= w;
    e.reg_sq_mean /= w;
    e.reg_l1_mean /= w;
  }
  return e;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (grad_tolerance && !(*grad_tolerance > 0.0)) throw ConfigError("gradient tolerance must be positive");
  if (grad_norm_every == 0) throw ConfigError("grad_norm_every must be at least 1");
  if (schedule.empty()) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
    return;
  }
  std::size_t next = 1;
  for (const ScheduleSpan& s : schedule) {
    if (s.first != next || s.last < s.first) {
      throw ConfigError("schedule spans must partition epochs 1.." + std::to_string(epochs));
    }
    if (!(s.lr > 0.0) || !std::isfinite(s.lr)) throw ConfigError("learning rate must be positive");
    next = s.last + 1;
  }
  if (next != epochs + 1) throw ConfigError("schedule spans must partition epochs 1.." + std::to_string(epochs));
}

double TrainConfig::lr_at(std::size_t epoch) const {
  for (const ScheduleSpan& s : schedule) {
    if (epoch >= s.first && epoch <= s.last) return s.lr;
  }
  if (!schedule.empty()) return schedule.back().lr;
  return lr;
}

TrainResult train(const ModelSpec& model, const ObjectiveSpec& objective, const data::PairedSource& data,
                  const TrainConfig& cfg) {
  cfg.validate();
  require_data(objective, data);
  if (data.feature_shape() != model.input_shape()) {
    throw ShapeError("model " + model.describe() + " expects features " + ad::shape_to_string(model.input_shape()) +
                     ", data has " + ad::shape_to_string(data.feature_shape()));
  }
  const std::size_t n = data.size();
  const bool full = cfg.full_batch(n);
  const std::size_t bs = full ? n : cfg.batch_size;
  const bool twins = objective.uses_augmented();

  TrainResult result{init_params(model, cfg.seed), {}};
  Optimizer opt(cfg.optimizer, cfg.adam);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t iteration = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at(epoch);
    if (!full) {
      std::iota(order.begin(), order.end(), 0);
      Rng rng = make_rng(cfg.seed, {stream::kShuffle, epoch});
      std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<StepRecord> steps;
    std::vector<double> weights;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t count = std::min(bs, n - start);
      const Batch b = assemble(data, std::span<const std::size_t>(order).subspan(start, count), twins, epoch - 1);
      StepOutcome s = batch_step(model, objective, result.params, b);
      if (!std::isfinite(s.objective)) non_finite(epoch, iteration, s.objective);
      s.record.iteration = iteration;
      s.record.epoch = epoch;
      if (full || iteration % cfg.grad_norm_every == 0) s.record.grad_norm = s.grad.l2_norm();
      opt.step(result.params, s.grad, lr);
      steps.push_back(s.record);
      weights.push_back(static_cast<double>(count));
      ++iteration;
    }
    result.history.epochs.push_back(summarize(epoch, lr, steps, weights));
    if (cfg.record_steps) result.history.steps.insert(result.history.steps.end(), steps.begin(), steps.end());
  }
  return result;
}

ConvergenceResult train_to_tolerance(const ModelSpec& model, const ObjectiveSpec& objective,
                                     const data::PairedSource& data, const TrainConfig& cfg) {
  if (!cfg.grad_tolerance) throw ConfigError("train_to_tolerance needs a gradient tolerance");
  if (!cfg.full_batch(data.size())) throw ConfigError("train_to_tolerance runs in full-batch mode only");
  require_data(objective, data);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  const Batch b = assemble(data, all, objective.uses_augmented(), 0);

  ConvergenceResult out;
  out.params = init_params(model, cfg.seed);
  Optimizer opt(cfg.optimizer, cfg.adam);
  const double lr = cfg.schedule.empty() ? cfg.lr : cfg.schedule.front().lr;
  for (std::size_t it = 0;; ++it) {
    StepOutcome s = batch_step(model, objective, out.params, b);
    if (!std::isfinite(s.objective)) non_finite(1, it, s.objective);
    const double norm = s.grad.l2_norm();
    s.record.iteration = it;
    s.record.epoch = it + 1;
    s.record.grad_norm = norm;
    if (cfg.record_steps) out.history.steps.push_back(s.record);
    out.final_norm = norm;
    if (norm < *cfg.grad_tolerance) {
      out.iterations = it;
      out.converged = true;
      return out;
    }
    if (it == cfg.max_iterations) {
      out.iterations = it;
      return out;
    }
    opt.step(out.params, s.grad, lr);
  }
}

ConvergenceResult minimize(const ad::ObjectiveFn& objective, ad::ParamSet init, const TrainConfig& cfg) {
  ConvergenceResult out;
  out.params = std::move(init);
  Optimizer opt(cfg.optimizer, cfg.adam);
  const std::size_t cap = cfg.grad_tolerance ? cfg.max_iterations : cfg.epochs;
  for (std::size_t it = 0;; ++it) {
    ad::Tape tape(out.params);
    Var f = objective(tape);
    const double value = f.value().item();
    if (!std::isfinite(value)) non_finite(it + 1, it, value);
    const ad::ParamSet g = ad::backward(tape, f, out.params);
    const double norm = g.l2_norm();
    out.final_norm = norm;
    StepRecord r;
    r.iteration = it;
    r.epoch = it + 1;
    r.objective = value;
    r.base_mean = value;
    r.grad_norm = norm;
    if (cfg.record_steps) out.history.steps.push_back(r);
    if (cfg.grad_tolerance && norm < *cfg.grad_tolerance) {
      out.iterations = it;
      out.converged = true;
      return out;
    }
    if (it == cap) {
      out.iterations = it;
      return out;
    }
    opt.step(out.params, g, cfg.lr_at(it + 1));
  }
}

std::vector<double> predict(const ad::ParamSet& params, const ModelSpec& model, const data::PairedSource& data,
                            bool twins, std::size_t epoch) {
  const std::size_t n = data.size(), f = data.feature_size(), k = model.output_width();
  std::vector<double> out(n * k);
  for (std::size_t start = 0; start < n; start += kEvalChunk) {
    const std::size_t count = std::min(kEvalChunk, n - start);
    Tensor x = Tensor::zeros(batch_shape(count, data.feature_shape()));
    for (std::size_t j = 0; j < count; ++j) {
      std::span<double> dst(x.data() + j * f, f);
      if (twins) {
        data.write_augmented(start + j, epoch, dst);
      } else {
        data.write_original(start + j, dst);
      }
    }
    ad::Tape tape(params);
    Var y = apply_model(model, tape, tape.constant(std::move(x)));
    std::copy_n(y.value().data(), count * k, out.data() + start * k);
  }
  return out;
}

std::vector<std::uint8_t> correctness(const ad::ParamSet& params, const ModelSpec& model,
                                      const data::PairedSource& data, bool twins) {
  const std::vector<double> out = predict(params, model, data, twins);
  const std::size_t k = model.output_width();
  std::vector<std::uint8_t> ok(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double* row = out.data() + i * k;
    double predicted;
    if (k == 1) {
      predicted = row[0] > 0.0 ? 1.0 : 0.0;
    } else {
      predicted = static_cast<double>(std::max_element(row, row + k) - row);
    }
    ok[i] = predicted == data.label(i) ? 1 : 0;
  }
  return ok;
}

double evaluate(const ad::ParamSet& params, const ModelSpec& model, const data::PairedSource& data, Task task) {
  if (data.size() == 0) throw DataError("evaluation set is empty");
  if (task == Task::kAccuracy) {
    const auto ok = correctness(params, model, data, false);
    return static_cast<double>(std::accumulate(ok.begin(), ok.end(), std::size_t{0})) /
           static_cast<double>(ok.size());
  }
  if (model.output_width() != 1) throw ConfigError("rmse needs a single-output model");
  const std::vector<double> out = predict(params, model, data, false);
  double sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = out[i] - data.label(i);
    sse += r * r;
  }
  return std::sqrt(sse / static_cast<double>(data.size()));
}

std::optional<double> consistency_eval(const ad::ParamSet& params, const ModelSpec& model,
                                      const data::PairedSource& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.has_twin(i)) throw DataError("consistency evaluation needs every test sample paired; " +
                                           std::to_string(i) + " is not");
  }
  const auto orig = correctness(params, model, data, false);
  const auto aug = correctness(params, model, data, true);
  return consistency_metric(orig, aug);
}

}  // namespace dair::train
