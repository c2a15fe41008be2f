#include "dair/harness/presets.hpp"

#include <functional>
#include <map>

#include "dair/errors.hpp"

namespace dair::harness {
namespace {

std::vector<Variant> variants(std::initializer_list<const char*> names, const LossSpec& loss) {
  std::vector<Variant> out;
  for (const char* n : names) out.push_back(parse_variant(n, loss));
  return out;
}

train::TrainConfig mnist_train() {
  train::TrainConfig t;
  t.epochs = 40;
  t.batch_size = 64;
  // Plain SGD at these rates leaves the DAIR runs at a constant predictor.
  t.optimizer = train::OptimizerKind::kAdam;
  t.schedule = {{1, 20, 0.005}, {21, 40, 0.0005}};
  t.grad_norm_every = 50;
  t.record_steps = false;
  return t;
}

ExperimentConfig mnist_base(DatasetKind kind, const MnistPaths& mnist) {
  ExperimentConfig c;
  c.dataset.kind = kind;
  c.dataset.n_train = 20000;
  c.dataset.n_test = 10000;
  c.dataset.mnist = mnist;
  c.train = mnist_train();
  c.task = train::Task::kAccuracy;
  c.replicates = 3;
  return c;
}

ExperimentConfig colored(data::Scheme aug, double lambda, const MnistPaths& mnist) {
  ExperimentConfig c = mnist_base(DatasetKind::kColored, mnist);
  c.dataset.train_scheme = data::Scheme::kC1;
  c.dataset.aug_scheme = aug;
  c.dataset.test_scheme = data::Scheme::kC3;
  c.dataset.noise_at_test = true;
  c.noises = {0.25};
  c.model = train::ModelSpec::cnn(1, 3);
  c.variants = variants({"erm", "da-erm", "dair-sq"}, LossSpec::logistic());
  c.lambdas = {lambda};
  return c;
}

ExperimentConfig rotated(data::Scheme train, data::Scheme aug, data::Scheme test, double lambda,
                         const MnistPaths& mnist) {
  ExperimentConfig c = mnist_base(DatasetKind::kRotated, mnist);
  c.dataset.train_scheme = train;
  c.dataset.aug_scheme = aug;
  c.dataset.test_scheme = test;
  c.model = train::ModelSpec::cnn(10, 1);
  c.variants = variants({"erm", "da-erm", "dair-sq"}, LossSpec::cross_entropy());
  c.lambdas = {lambda};
  return c;
}

ExperimentConfig toy_regression() {
  ExperimentConfig c;
  c.dataset.kind = DatasetKind::kToyRegression;
  c.dataset.n_train = 100000;
  c.dataset.n_test = 10000;
  c.model = train::ModelSpec::linear(2, false);
  c.variants = variants({"erm", "da-erm", "dair-sq"}, LossSpec::squared());
  c.lambdas = {100.0};
  c.task = train::Task::kRmse;
  c.train.optimizer = train::OptimizerKind::kAdam;
  c.train.batch_size = 0;
  c.train.epochs = 400;
  c.train.lr = 0.02;
  return c;
}

ExperimentConfig toy_logistic() {
  ExperimentConfig c;
  c.dataset.kind = DatasetKind::kToyLogistic;
  c.dataset.n_train = 1000;
  c.dataset.n_test = 1000;
  c.dataset.var_x = 1.0;
  c.dataset.var_t1 = 1.0;
  c.dataset.var_t2 = 1.0;
  c.model = train::ModelSpec::logistic(2, false);
  c.variants = variants({"dair-sq"}, LossSpec::logistic());
  c.lambdas = {0.5, 1, 2, 5, 10, 100, 1000, 10000};
  c.task = train::Task::kAccuracy;
  c.train.optimizer = train::OptimizerKind::kAdam;
  c.train.batch_size = 0;
  c.train.lr = 0.1;
  c.train.epochs = 100000;
  c.train.max_iterations = 100000;
  c.train.grad_tolerance = 1e-7;
  c.train.record_steps = false;
  c.replicates = 20;
  return c;
}

ExperimentConfig robust_regression() {
  ExperimentConfig c;
  c.dataset.kind = DatasetKind::kRobustRegression;
  c.dataset.n_train = 2000;
  c.dataset.n_test = 2000;
  c.model = train::ModelSpec::linear(c.dataset.robust.d + 1, true);
  LossSpec l2 = LossSpec::squared();
  c.variants = variants({"erm@squared", "da-erm@squared", "dair-sq@squared", "erm@huber", "da-erm@huber",
                         "dair-sq@huber", "erm@tilted", "da-erm@tilted", "dair-sq@tilted"},
                        l2);
  c.lambdas = {10.0};
  c.noises = {0.0, 0.2, 0.4};
  c.task = train::Task::kRmse;
  c.train.optimizer = train::OptimizerKind::kGd;
  c.train.batch_size = 0;
  c.train.epochs = 2000;
  c.train.lr = 0.01;
  c.train.record_steps = false;
  c.replicates = 3;
  return c;
}

using Factory = std::function<ExperimentConfig(const MnistPaths&)>;

const std::map<std::string, Factory, std::less<>>& registry() {
  static const std::map<std::string, Factory, std::less<>> r = {
      {"toy-regression", [](const MnistPaths&) { return toy_regression(); }},
      {"toy-logistic", [](const MnistPaths&) { return toy_logistic(); }},
      {"colored-adv", [](const MnistPaths& m) { return colored(data::Scheme::kC2, 1000.0, m); }},
      {"colored-rnd", [](const MnistPaths& m) { return colored(data::Scheme::kC4, 100.0, m); }},
      {"rotated-strong",
       [](const MnistPaths& m) { return rotated(data::Scheme::kR1, data::Scheme::kR5, data::Scheme::kR2, 1.0, m); }},
      {"rotated-weak",
       [](const MnistPaths& m) { return rotated(data::Scheme::kR4, data::Scheme::kR6, data::Scheme::kR3, 10.0, m); }},
      {"rotated-noise-sweep",
       [](const MnistPaths& m) {
         ExperimentConfig c =
             rotated(data::Scheme::kR1, data::Scheme::kRotStrong, data::Scheme::kRotStrong, 1.0, m);
         c.variants = variants({"da-erm", "dair-sq", "dair-l1", "dair-kl", "dair-l2"}, LossSpec::cross_entropy());
         c.lambdas = {1.0, 10.0, 100.0};
         c.noises = {0.0, 0.2, 0.4};
         return c;
       }},
      {"partial-aug",
       [](const MnistPaths& m) {
         ExperimentConfig c =
             rotated(data::Scheme::kR4, data::Scheme::kR6, data::Scheme::kR3, 10.0, m);
         c.variants = variants({"da-erm", "dair-sq"}, LossSpec::cross_entropy());
         c.fractions = {0.1, 0.2, 0.3, 0.5, 1.0};
         return c;
       }},
      {"robust-regression-synthetic", [](const MnistPaths&) { return robust_regression(); }},
  };
  return r;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, f] : registry()) out.push_back(name);
  return out;
}

ExperimentConfig make_preset(std::string_view name, const MnistPaths& mnist) {
  const auto& r = registry();
  const auto it = r.find(name);
  if (it == r.end()) {
    std::string known;
    for (const auto& [n, f] : r) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + std::string(name) + "'; known presets: " + known);
  }
  ExperimentConfig c = it->second(mnist);
  c.preset = std::string(name);
  return c;
}

}  // namespace dair::harness
