#include "dair/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "dair/data/mnist.hpp"
#include "dair/data/synthetic.hpp"
#include "dair/errors.hpp"
#include "dair/rng.hpp"

namespace dair::harness {
namespace {

struct Prepared {
  std::unique_ptr<data::PairedSource> train;
  std::unique_ptr<data::PairedSource> test;
};

std::unique_ptr<data::PairedSource> vector_source(std::vector<data::PairedSample> s) {
  return std::make_unique<data::VectorSource>(std::move(s));
}

Prepared prepare_synthetic(const ExperimentConfig& c, double noise, double fraction, std::uint64_t seed) {
  const auto& d = c.dataset;
  data::SyntheticSplit split;
  switch (d.kind) {
    case DatasetKind::kToyRegression:
      split = data::gen_spurious_regression(d.n_train, d.toy, seed, d.n_test);
      break;
    case DatasetKind::kToyLogistic:
      split = data::gen_logistic_toy(d.n_train, d.var_x, d.var_t1, d.var_t2, seed, d.n_test);
      break;
    case DatasetKind::kRobustRegression: {
      data::RobustRegressionParams p = d.robust;
      p.noise = noise;
      split = data::gen_robust_regression(d.n_train, p, seed, d.n_test);
      break;
    }
    default:
      throw ConfigError("not a synthetic dataset");
  }
  Prepared out;
  out.train = vector_source(data::apply_fraction(std::move(split.train), fraction, seed));
  out.test = vector_source(std::move(split.test));
  return out;
}

std::vector<double> task_labels(const ExperimentConfig& c, const data::DigitSet& digits) {
  std::vector<double> labels;
  labels.reserve(digits->size());
  for (const data::RawDigit& d : *digits) {
    labels.push_back(c.dataset.kind == DatasetKind::kColored ? data::binarize_digit(d.digit) : d.digit);
  }
  return labels;
}

// Test views: original = test scheme, twin = training scheme, so the
// consistency metric asks whether a digit recognised in the training
// presentation survives the shift.
Prepared prepare_mnist(const ExperimentConfig& c, const Variant& v, const data::MnistSplit& mnist, double noise,
                       double fraction, std::uint64_t seed) {
  const auto& d = c.dataset;
  const data::NoiseMode mode =
      d.kind == DatasetKind::kColored ? data::NoiseMode::kBernoulliFlip : data::NoiseMode::kUniformReplace10;
  std::vector<double> train_labels = task_labels(c, mnist.train);
  std::vector<double> test_labels = task_labels(c, mnist.test);
  if (noise > 0.0) {
    Rng r = make_rng(seed, {stream::kNoise, 0});
    train_labels = data::inject_label_noise(std::move(train_labels), noise, mode, r);
    if (d.noise_at_test) {
      Rng rt = make_rng(seed, {stream::kNoise, 1});
      test_labels = data::inject_label_noise(std::move(test_labels), noise, mode, rt);
    }
  }
  Prepared out;
  data::SchemeSource::Options tr;
  tr.original = d.train_scheme;
  if (v.objective.uses_augmented()) tr.augmenter = d.aug_scheme;
  tr.fraction = fraction;
  tr.regenerate_each_epoch = d.regenerate_each_epoch;
  tr.seed = seed;
  out.train = std::make_unique<data::SchemeSource>(mnist.train, std::move(train_labels), tr);
  data::SchemeSource::Options te;
  te.original = d.test_scheme;
  te.augmenter = d.train_scheme;
  te.fraction = 1.0;
  te.regenerate_each_epoch = false;
  te.seed = derive_seed(seed, {stream::kTest});
  out.test = std::make_unique<data::SchemeSource>(mnist.test, std::move(test_labels), te);
  return out;
}

void add_train_stats(RunRecord& r, const train::TrainHistory& h) {
  if (!h.epochs.empty()) {
    const train::EpochRecord& e = h.epochs.back();
    r.set("train_objective", e.objective);
    r.set("base_loss", e.base_mean);
    r.set("loss_original", e.loss_original_mean);
    r.set("reg_sq", e.reg_sq_mean);
    r.set("reg_l1", e.reg_l1_mean);
  } else if (!h.steps.empty()) {
    const train::StepRecord& s = h.steps.back();
    r.set("train_objective", s.objective);
    r.set("base_loss", s.base_mean);
    r.set("loss_original", s.loss_original_mean);
    r.set("reg_sq", s.reg_sq_mean);
    r.set("reg_l1", s.reg_l1_mean);
  }
}

RunRecord run_point(const ExperimentConfig& c, const RunPoint& p, const std::optional<data::MnistSplit>& mnist) {
  const auto start = std::chrono::steady_clock::now();
  const Variant& v = c.variants.at(p.variant);
  const std::uint64_t seed = c.base_seed + p.replicate;

  RunRecord r;
  r.experiment = v.name;
  r.preset = c.preset;
  r.seed = seed;
  r.lambda = p.lambda;
  r.noise = p.noise;
  r.fraction = p.fraction;

  ObjectiveSpec obj = v.objective;
  obj.lambda = p.lambda;
  const Prepared data =
      mnist ? prepare_mnist(c, v, *mnist, p.noise, p.fraction, seed) : prepare_synthetic(c, p.noise, p.fraction, seed);

  train::TrainConfig tc = c.train;
  tc.seed = seed;
  ad::ParamSet params;
  if (tc.grad_tolerance) {
    tc.record_steps = false;
    train::ConvergenceResult res = train::train_to_tolerance(c.model, obj, *data.train, tc);
    params = std::move(res.params);
    r.set("iterations", static_cast<double>(res.iterations));
    r.set("converged", res.converged ? 1.0 : 0.0);
    r.set("final_grad_norm", res.final_norm);
  } else {
    train::TrainResult res = train::train(c.model, obj, *data.train, tc);
    params = std::move(res.params);
    add_train_stats(r, res.history);
  }

  if (c.task == train::Task::kAccuracy) {
    r.set("test_accuracy", train::evaluate(params, c.model, *data.test, c.task));
  } else {
    r.set("test_rmse", train::evaluate(params, c.model, *data.test, c.task));
  }
  if (mnist) {
    const auto shifted = train::correctness(params, c.model, *data.test, false);
    const auto familiar = train::correctness(params, c.model, *data.test, true);
    r.set("cm", consistency_metric(familiar, shifted));
  }
  const bool two_weights = (c.model.kind == train::ModelKind::kLinear || c.model.kind == train::ModelKind::kLogistic) &&
                           c.model.inputs == 2;
  if (two_weights) {
    const ad::Tensor& w = params.get("w");
    r.set("w1", w[0]);
    r.set("w2", w[1]);
    if (c.dataset.kind == DatasetKind::kToyRegression && !c.model.bias) {
      r.set("test_loss_population", test_loss({w[0], w[1]}, c.dataset.toy));
    }
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::optional<data::MnistSplit> load_data(const ExperimentConfig& c) {
  if (c.dataset.kind != DatasetKind::kColored && c.dataset.kind != DatasetKind::kRotated) return std::nullopt;
  const auto& m = c.dataset.mnist;
  data::MnistSplit split = data::load_mnist(m.train_images, m.train_labels, m.test_images, m.test_labels,
                                            c.dataset.n_train);
  if (split.train->size() < c.dataset.n_train) {
    throw DataError("MNIST training file holds " + std::to_string(split.train->size()) + " digits, fewer than " +
                    std::to_string(c.dataset.n_train));
  }
  if (split.test->size() > c.dataset.n_test) {
    split.test = std::make_shared<const std::vector<data::RawDigit>>(split.test->begin(),
                                                                     split.test->begin() + c.dataset.n_test);
  }
  return split;
}

}  // namespace

std::vector<RunPoint> expand(const ExperimentConfig& cfg) {
  std::vector<RunPoint> out;
  for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
    const ObjectiveSpec& o = cfg.variants[v].objective;
    const bool uses_lambda = o.mode == Mode::kDair && o.regularizer.kind != RegularizerKind::kNone;
    const std::vector<double> lambdas = uses_lambda ? cfg.lambdas : std::vector<double>{0.0};
    for (double noise : cfg.noises) {
      for (double fraction : cfg.fractions) {
        for (double lambda : lambdas) {
          for (std::size_t rep = 0; rep < cfg.replicates; ++rep) out.push_back({v, lambda, noise, fraction, rep});
        }
      }
    }
  }
  return out;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const Progress& progress) {
  cfg.validate();
  const std::optional<data::MnistSplit> mnist = load_data(cfg);
  const std::vector<RunPoint> points = expand(cfg);
  std::vector<std::optional<RunRecord>> slots(points.size());
  std::atomic<std::size_t> next{0};
  std::size_t finished = 0;
  std::mutex mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        RunRecord r = run_point(cfg, points[i], mnist);
        std::lock_guard lock(mu);
        slots[i] = std::move(r);
        ++finished;
        if (progress) progress(*slots[i], finished, points.size());
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t threads = std::min(cfg.parallel, points.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RunRecord> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<SweepGroup> sweep(const ExperimentConfig& cfg, SweepAxis axis, const Progress& progress) {
  if (cfg.axis_values(axis).empty()) throw ConfigError("sweep axis " + std::string(to_string(axis)) + " is empty");
  std::vector<RunRecord> records = run_experiment(cfg, progress);
  std::map<double, std::vector<RunRecord>> by;
  for (RunRecord& r : records) by[r.axis(axis)].push_back(std::move(r));
  std::vector<SweepGroup> out;
  for (auto& [value, rs] : by) out.push_back({value, std::move(rs)});
  return out;
}

void emit_results(const ExperimentConfig& cfg, const std::vector<RunRecord>& records,
                  std::optional<SweepAxis> plot_axis) {
  const auto& dir = cfg.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_records_csv(records, dir / "records.csv");
  const auto aggs = aggregate(records);
  write_aggregates_csv(aggs, dir / "aggregates.csv");
  write_timings_csv(records, dir / "timings.csv");
  {
    std::ofstream out(dir / "config.ini", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "config.ini").string());
    out << echo_config(cfg);
  }
  if (plot_axis) write_plot_data(aggs, *plot_axis, dir / "plot");
}

}  // namespace dair::harness
