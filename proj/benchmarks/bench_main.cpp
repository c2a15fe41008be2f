#include <benchmark/benchmark.h>
#include <malloc.h>

#include <random>

#include "dair/autodiff/ops.hpp"
#include "dair/data/paired.hpp"
#include "dair/objectives.hpp"
#include "dair/train/model.hpp"
#include "dair/train/trainer.hpp"

using namespace dair;
using namespace dair::ad;

namespace {

Tensor noise(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  ParamSet p;
  p.add("k", noise({6, 3, 4, 4}, 1));
  p.add("b", noise({6}, 2));
  const Tensor x = noise({n, 3, 28, 28}, 3);
  for (auto _ : state) {
    Tape t(p);
    Var y = conv2d(t.constant(x), t.param("k"), t.param("b"));
    benchmark::DoNotOptimize(backward(t, sum(y), p));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(1)->Arg(64);

void BM_DenseForwardBackward(benchmark::State& state) {
  ParamSet p;
  p.add("w", noise({64, 96}, 4));
  p.add("b", noise({64}, 5));
  const Tensor x = noise({64, 96}, 6);
  for (auto _ : state) {
    Tape t(p);
    Var y = dense(t.constant(x), t.param("w"), t.param("b"));
    benchmark::DoNotOptimize(backward(t, sum(y * y), p));
  }
}
BENCHMARK(BM_DenseForwardBackward);

// One DAIR-SQ minibatch step of the colored-MNIST CNN: two forward passes,
// the paired objective and the backward sweep.
void BM_CnnDairSqStep(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto spec = train::ModelSpec::cnn(1, 3);
  const ParamSet params = train::init_params(spec, 7);
  const Tensor orig = noise({n, 3, 28, 28}, 8), aug = noise({n, 3, 28, 28}, 9);
  std::vector<double> y(n);
  std::vector<std::size_t> paired(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<double>(i % 2);
    paired[i] = i;
  }
  ObjectiveSpec obj;
  obj.loss = LossSpec::logistic();
  obj.mode = Mode::kDair;
  obj.regularizer.kind = RegularizerKind::kSq;
  obj.lambda = 100.0;
  for (auto _ : state) {
    Tape t(params);
    BranchOutputs o{per_sample_loss(obj.loss, train::apply_model(spec, t, t.constant(orig)), y), std::nullopt};
    BranchOutputs a{per_sample_loss(obj.loss, train::apply_model(spec, t, t.constant(aug)), y), std::nullopt};
    benchmark::DoNotOptimize(backward(t, batch_objective(obj, o, a, paired), params));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_CnnDairSqStep)->Arg(64)->Unit(benchmark::kMillisecond);

// Full-batch epoch of the toy regression at 100k samples.
void BM_ToyRegressionEpoch(benchmark::State& state) {
  std::vector<data::PairedSample> s;
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < 100000; ++i) {
    const double x = g(rng), y = x + 0.5 * g(rng);
    s.push_back({Tensor::vector({x, y}), Tensor::vector({x, 0.5 * y + 0.3 * g(rng)}), y, i});
  }
  const data::VectorSource src(s);
  ObjectiveSpec obj;
  obj.mode = Mode::kDair;
  obj.regularizer.kind = RegularizerKind::kSq;
  obj.lambda = 100.0;
  train::TrainConfig cfg;
  cfg.record_steps = false;
  for (auto _ : state) benchmark::DoNotOptimize(train::train(train::ModelSpec::linear(2), obj, src, cfg));
}
BENCHMARK(BM_ToyRegressionEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  // Same allocator settings as the CLI; per-step tensors otherwise churn mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
