#include "dair/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dair/errors.hpp"
#include "dair/harness/presets.hpp"
#include "dair/harness/records.hpp"

namespace dair::harness {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(sep, start);
    const auto piece = trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!piece.empty()) out.push_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& key, std::string_view text) {
  double v = 0.0;
  const auto t = trim(text);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": '" + std::string(text) + "' is not a finite number");
  }
  return v;
}

std::size_t to_size(const std::string& key, std::string_view text) {
  std::size_t v = 0;
  const auto t = trim(text);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) {
    throw ConfigError(key + ": '" + std::string(text) + "' is not a nonnegative integer");
  }
  return v;
}

bool to_bool(const std::string& key, std::string_view text) {
  const auto t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + ": '" + std::string(text) + "' is not a boolean");
}

std::string fmt(double v) { return format_number(v); }

train::ModelKind parse_model_kind(std::string_view t) {
  if (t == "linear") return train::ModelKind::kLinear;
  if (t == "logistic") return train::ModelKind::kLogistic;
  if (t == "mlp") return train::ModelKind::kMlp;
  if (t == "cnn") return train::ModelKind::kCnn;
  throw ConfigError("unknown model kind '" + std::string(t) + "'");
}

std::string_view model_kind_name(train::ModelKind k) {
  switch (k) {
    case train::ModelKind::kLinear: return "linear";
    case train::ModelKind::kLogistic: return "logistic";
    case train::ModelKind::kMlp: return "mlp";
    case train::ModelKind::kCnn: return "cnn";
  }
  return "?";
}

std::vector<train::ScheduleSpan> parse_schedule(std::string_view text) {
  std::vector<train::ScheduleSpan> out;
  for (const std::string& piece : split(text, ',')) {
    const auto colon = piece.find(':');
    const auto dash = piece.find('-');
    if (colon == std::string::npos || dash == std::string::npos || dash > colon) {
      throw ConfigError("schedule entry '" + piece + "' must look like first-last:lr");
    }
    train::ScheduleSpan s;
    s.first = to_size("train.schedule", piece.substr(0, dash));
    s.last = to_size("train.schedule", piece.substr(dash + 1, colon - dash - 1));
    s.lr = to_double("train.schedule", piece.substr(colon + 1));
    out.push_back(s);
  }
  return out;
}

std::string format_schedule(const std::vector<train::ScheduleSpan>& spans) {
  std::string out;
  for (const auto& s : spans) {
    if (!out.empty()) out += ",";
    out += std::to_string(s.first) + "-" + std::to_string(s.last) + ":" + fmt(s.lr);
  }
  return out;
}

std::string format_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t x : v) {
    if (!out.empty()) out += ",";
    out += std::to_string(x);
  }
  return out;
}

std::string variant_text(const Variant& v) { return v.name; }

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

struct Pending {
  std::optional<std::string> variants;
  std::optional<std::string> mnist_dir;
};

std::map<std::string, Setter> setters(Pending& pending) {
  std::map<std::string, Setter> m;
  m["experiment.preset"] = [](auto& c, const auto& v) { c.preset = trim(v); };
  m["experiment.replicates"] = [](auto& c, const auto& v) { c.replicates = to_size("experiment.replicates", v); };
  m["experiment.seed"] = [](auto& c, const auto& v) { c.base_seed = to_size("experiment.seed", v); };
  m["experiment.out"] = [](auto& c, const auto& v) { c.out_dir = trim(v); };
  m["experiment.parallel"] = [](auto& c, const auto& v) { c.parallel = to_size("experiment.parallel", v); };
  m["experiment.task"] = [](auto& c, const auto& v) {
    const auto t = trim(v);
    if (t == "accuracy") {
      c.task = train::Task::kAccuracy;
    } else if (t == "rmse") {
      c.task = train::Task::kRmse;
    } else {
      throw ConfigError("experiment.task must be accuracy or rmse");
    }
  };

  m["dataset.kind"] = [](auto& c, const auto& v) { c.dataset.kind = parse_dataset_kind(trim(v)); };
  m["dataset.n_train"] = [](auto& c, const auto& v) { c.dataset.n_train = to_size("dataset.n_train", v); };
  m["dataset.n_test"] = [](auto& c, const auto& v) { c.dataset.n_test = to_size("dataset.n_test", v); };
  m["dataset.a"] = [](auto& c, const auto& v) { c.dataset.toy.a = to_double("dataset.a", v); };
  m["dataset.var_x"] = [](auto& c, const auto& v) {
    c.dataset.toy.var_x = to_double("dataset.var_x", v);
    c.dataset.var_x = c.dataset.toy.var_x;
  };
  m["dataset.var_eps"] = [](auto& c, const auto& v) { c.dataset.toy.var_eps = to_double("dataset.var_eps", v); };
  m["dataset.var_n"] = [](auto& c, const auto& v) { c.dataset.toy.var_n = to_double("dataset.var_n", v); };
  m["dataset.gamma"] = [](auto& c, const auto& v) { c.dataset.toy.gamma = to_double("dataset.gamma", v); };
  m["dataset.var_t1"] = [](auto& c, const auto& v) { c.dataset.var_t1 = to_double("dataset.var_t1", v); };
  m["dataset.var_t2"] = [](auto& c, const auto& v) { c.dataset.var_t2 = to_double("dataset.var_t2", v); };
  m["dataset.robust_d"] = [](auto& c, const auto& v) { c.dataset.robust.d = to_size("dataset.robust_d", v); };
  m["dataset.robust_var_eps"] = [](auto& c, const auto& v) {
    c.dataset.robust.var_eps = to_double("dataset.robust_var_eps", v);
  };
  m["dataset.outlier_shift"] = [](auto& c, const auto& v) {
    c.dataset.robust.outlier_shift = to_double("dataset.outlier_shift", v);
  };
  m["dataset.outlier_var"] = [](auto& c, const auto& v) {
    c.dataset.robust.outlier_var = to_double("dataset.outlier_var", v);
  };
  m["dataset.train_scheme"] = [](auto& c, const auto& v) { c.dataset.train_scheme = data::parse_scheme(trim(v)); };
  m["dataset.aug_scheme"] = [](auto& c, const auto& v) { c.dataset.aug_scheme = data::parse_scheme(trim(v)); };
  m["dataset.test_scheme"] = [](auto& c, const auto& v) { c.dataset.test_scheme = data::parse_scheme(trim(v)); };
  m["dataset.label_noise"] = [](auto& c, const auto& v) { c.noises = {to_double("dataset.label_noise", v)}; };
  m["dataset.noise_at_test"] = [](auto& c, const auto& v) { c.dataset.noise_at_test = to_bool("dataset.noise_at_test", v); };
  m["dataset.regenerate_each_epoch"] = [](auto& c, const auto& v) {
    c.dataset.regenerate_each_epoch = to_bool("dataset.regenerate_each_epoch", v);
  };
  m["dataset.mnist_dir"] = [&pending](auto&, const auto& v) { pending.mnist_dir = trim(v); };
  m["dataset.mnist_train_images"] = [](auto& c, const auto& v) { c.dataset.mnist.train_images = trim(v); };
  m["dataset.mnist_train_labels"] = [](auto& c, const auto& v) { c.dataset.mnist.train_labels = trim(v); };
  m["dataset.mnist_test_images"] = [](auto& c, const auto& v) { c.dataset.mnist.test_images = trim(v); };
  m["dataset.mnist_test_labels"] = [](auto& c, const auto& v) { c.dataset.mnist.test_labels = trim(v); };

  m["model.kind"] = [](auto& c, const auto& v) { c.model.kind = parse_model_kind(trim(v)); };
  m["model.inputs"] = [](auto& c, const auto& v) { c.model.inputs = to_size("model.inputs", v); };
  m["model.bias"] = [](auto& c, const auto& v) { c.model.bias = to_bool("model.bias", v); };
  m["model.hidden"] = [](auto& c, const auto& v) {
    c.model.hidden.clear();
    for (const auto& h : split(v, ',')) c.model.hidden.push_back(to_size("model.hidden", h));
  };
  m["model.outputs"] = [](auto& c, const auto& v) { c.model.outputs = to_size("model.outputs", v); };
  m["model.in_channels"] = [](auto& c, const auto& v) { c.model.in_channels = to_size("model.in_channels", v); };

  m["objective.variants"] = [&pending](auto&, const auto& v) { pending.variants = v; };
  m["objective.loss"] = [](auto& c, const auto& v) {
    const LossKind k = parse_loss_kind(trim(v));
    for (auto& var : c.variants) var.objective.loss.kind = k;
  };
  m["objective.huber_delta"] = [](auto& c, const auto& v) {
    for (auto& var : c.variants) var.objective.loss.delta = to_double("objective.huber_delta", v);
  };
  m["objective.tilt"] = [](auto& c, const auto& v) {
    for (auto& var : c.variants) var.objective.loss.tilt = to_double("objective.tilt", v);
  };

  m["train.epochs"] = [](auto& c, const auto& v) { c.train.epochs = to_size("train.epochs", v); };
  m["train.batch_size"] = [](auto& c, const auto& v) { c.train.batch_size = to_size("train.batch_size", v); };
  m["train.lr"] = [](auto& c, const auto& v) {
    c.train.lr = to_double("train.lr", v);
    c.train.schedule.clear();
  };
  m["train.schedule"] = [](auto& c, const auto& v) { c.train.schedule = parse_schedule(v); };
  m["train.optimizer"] = [](auto& c, const auto& v) { c.train.optimizer = train::parse_optimizer(trim(v)); };
  m["train.tolerance"] = [](auto& c, const auto& v) {
    const auto t = trim(v);
    if (t == "none") {
      c.train.grad_tolerance.reset();
    } else {
      c.train.grad_tolerance = to_double("train.tolerance", t);
    }
  };
  m["train.max_iterations"] = [](auto& c, const auto& v) { c.train.max_iterations = to_size("train.max_iterations", v); };
  m["train.grad_norm_every"] = [](auto& c, const auto& v) {
    c.train.grad_norm_every = to_size("train.grad_norm_every", v);
  };
  m["train.adam_beta1"] = [](auto& c, const auto& v) { c.train.adam.beta1 = to_double("train.adam_beta1", v); };
  m["train.adam_beta2"] = [](auto& c, const auto& v) { c.train.adam.beta2 = to_double("train.adam_beta2", v); };
  m["train.adam_eps"] = [](auto& c, const auto& v) { c.train.adam.eps = to_double("train.adam_eps", v); };

  m["sweep.lambda.values"] = [](auto& c, const auto& v) { c.lambdas = parse_list(v); };
  m["sweep.noise.values"] = [](auto& c, const auto& v) { c.noises = parse_list(v); };
  m["sweep.fraction.values"] = [](auto& c, const auto& v) { c.fractions = parse_list(v); };
  return m;
}

}  // namespace

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kToyRegression: return "toy-regression";
    case DatasetKind::kToyLogistic: return "toy-logistic";
    case DatasetKind::kColored: return "colored-mnist";
    case DatasetKind::kRotated: return "rotated-mnist";
    case DatasetKind::kRobustRegression: return "robust-regression";
  }
  return "?";
}

DatasetKind parse_dataset_kind(std::string_view text) {
  for (DatasetKind k : {DatasetKind::kToyRegression, DatasetKind::kToyLogistic, DatasetKind::kColored,
                        DatasetKind::kRotated, DatasetKind::kRobustRegression}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown dataset kind '" + std::string(text) + "'");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kLambda: return "lambda";
    case SweepAxis::kNoise: return "noise";
    case SweepAxis::kFraction: return "fraction";
  }
  return "?";
}

SweepAxis parse_axis(std::string_view text) {
  for (SweepAxis a : {SweepAxis::kLambda, SweepAxis::kNoise, SweepAxis::kFraction}) {
    if (to_string(a) == text) return a;
  }
  throw ConfigError("unknown sweep axis '" + std::string(text) + "'");
}

Variant parse_variant(const std::string& text, const LossSpec& default_loss) {
  Variant v;
  v.name = text;
  v.objective.loss = default_loss;
  std::string head = text;
  const auto at = text.find('@');
  if (at != std::string::npos) {
    head = text.substr(0, at);
    const LossKind k = parse_loss_kind(text.substr(at + 1));
    v.objective.loss.kind = k;
  }
  if (head == "erm") {
    v.objective.mode = Mode::kErm;
  } else if (head == "da-erm") {
    v.objective.mode = Mode::kDaErm;
  } else if (head.rfind("dair-", 0) == 0) {
    v.objective.mode = Mode::kDair;
    v.objective.regularizer.kind = parse_regularizer_kind(head.substr(5));
  } else {
    throw ConfigError("unknown variant '" + text + "'; expected erm, da-erm or dair-<sq|l1|kl|l2>");
  }
  return v;
}

bool MnistPaths::complete() const {
  return !train_images.empty() && !train_labels.empty() && !test_images.empty() && !test_labels.empty();
}

MnistPaths MnistPaths::in_dir(const std::filesystem::path& dir) {
  return {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", dir / "t10k-images-idx3-ubyte",
          dir / "t10k-labels-idx1-ubyte"};
}

void ExperimentConfig::validate() const {
  if (replicates == 0) throw ConfigError("replicate count must be at least 1");
  if (parallel == 0) throw ConfigError("parallel bound must be at least 1");
  if (variants.empty()) throw ConfigError("no objective variants configured");
  if (lambdas.empty() || noises.empty() || fractions.empty()) throw ConfigError("sweep axes must be nonempty");
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw ConfigError("lambda values must be nonnegative");
  }
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("fraction values must lie in [0,1]");
  }
  for (double p : noises) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("noise values must lie in [0,1]");
  }
  if (dataset.n_train == 0 || dataset.n_test == 0) throw ConfigError("dataset sizes must be positive");
  for (const Variant& v : variants) {
    try {
      ObjectiveSpec probe = v.objective;
      probe.lambda = 0.0;
      probe.validate();
    } catch (const Error& e) {
      throw ConfigError("variant " + v.name + ": " + e.what());
    }
  }
  try {
    train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  if (dataset.kind == DatasetKind::kColored || dataset.kind == DatasetKind::kRotated) {
    if (!dataset.mnist.complete()) throw ConfigError("MNIST presets need the four IDX file paths");
    for (const auto& p : {dataset.mnist.train_images, dataset.mnist.train_labels, dataset.mnist.test_images,
                          dataset.mnist.test_labels}) {
      if (!std::filesystem::exists(p)) throw IoError("MNIST file not found: " + p.string());
    }
    const bool color = dataset.kind == DatasetKind::kColored;
    for (data::Scheme s : {dataset.train_scheme, dataset.aug_scheme, dataset.test_scheme}) {
      if ((data::family(s) == data::SchemeFamily::kColor) != color) {
        throw ConfigError("scheme " + std::string(data::to_string(s)) + " does not fit dataset " +
                          std::string(to_string(dataset.kind)));
      }
    }
  }
}

const std::vector<double>& ExperimentConfig::axis_values(SweepAxis axis) const {
  switch (axis) {
    case SweepAxis::kLambda: return lambdas;
    case SweepAxis::kNoise: return noises;
    case SweepAxis::kFraction: return fractions;
  }
  return lambdas;
}

ExperimentConfig parse_config(std::string_view ini_text, ExperimentConfig base) {
  pt::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Pending pending;
  const auto table = setters(pending);
  std::vector<std::pair<std::string, std::string>> deferred;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (!table.count(full)) throw ConfigError("config: unknown key '" + full + "'");
      // Loss settings apply to variants, so they run after the variant list.
      if (full.rfind("objective.", 0) == 0 && full != "objective.variants") {
        deferred.emplace_back(full, value.data());
      } else {
        table.at(full)(base, value.data());
      }
    }
  }
  if (pending.variants) {
    const LossSpec loss = base.variants.empty() ? LossSpec{} : base.variants.front().objective.loss;
    base.variants.clear();
    for (const std::string& v : split(*pending.variants, ',')) base.variants.push_back(parse_variant(v, loss));
  }
  for (const auto& [key, value] : deferred) table.at(key)(base, value);
  if (pending.mnist_dir) base.dataset.mnist = MnistPaths::in_dir(*pending.mnist_dir);
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string echo_config(const ExperimentConfig& c) {
  std::ostringstream os;
  const auto& d = c.dataset;
  os << "[experiment]\n"
     << "preset = " << c.preset << "\n"
     << "replicates = " << c.replicates << "\n"
     << "seed = " << c.base_seed << "\n"
     << "out = " << c.out_dir.string() << "\n"
     << "parallel = " << c.parallel << "\n"
     << "task = " << (c.task == train::Task::kAccuracy ? "accuracy" : "rmse") << "\n\n";
  os << "[dataset]\n"
     << "kind = " << to_string(d.kind) << "\n"
     << "n_train = " << d.n_train << "\n"
     << "n_test = " << d.n_test << "\n";
  switch (d.kind) {
    case DatasetKind::kToyRegression:
      os << "a = " << fmt(d.toy.a) << "\nvar_x = " << fmt(d.toy.var_x) << "\nvar_eps = " << fmt(d.toy.var_eps)
         << "\nvar_n = " << fmt(d.toy.var_n) << "\ngamma = " << fmt(d.toy.gamma) << "\n";
      break;
    case DatasetKind::kToyLogistic:
      os << "var_x = " << fmt(d.var_x) << "\nvar_t1 = " << fmt(d.var_t1) << "\nvar_t2 = " << fmt(d.var_t2) << "\n";
      break;
    case DatasetKind::kRobustRegression:
      os << "robust_d = " << d.robust.d << "\nrobust_var_eps = " << fmt(d.robust.var_eps)
         << "\noutlier_shift = " << fmt(d.robust.outlier_shift) << "\noutlier_var = " << fmt(d.robust.outlier_var)
         << "\n";
      break;
    case DatasetKind::kColored:
    case DatasetKind::kRotated:
      os << "train_scheme = " << data::to_string(d.train_scheme) << "\naug_scheme = " << data::to_string(d.aug_scheme)
         << "\ntest_scheme = " << data::to_string(d.test_scheme) << "\nnoise_at_test = "
         << (d.noise_at_test ? "true" : "false")
         << "\nregenerate_each_epoch = " << (d.regenerate_each_epoch ? "true" : "false")
         << "\nmnist_train_images = " << d.mnist.train_images.string()
         << "\nmnist_train_labels = " << d.mnist.train_labels.string()
         << "\nmnist_test_images = " << d.mnist.test_images.string()
         << "\nmnist_test_labels = " << d.mnist.test_labels.string() << "\n";
      break;
  }
  os << "\n[model]\n"
     << "kind = " << model_kind_name(c.model.kind) << "\n";
  if (c.model.kind == train::ModelKind::kCnn) {
    os << "in_channels = " << c.model.in_channels << "\noutputs = " << c.model.outputs << "\n";
  } else {
    os << "inputs = " << c.model.inputs << "\n";
    if (c.model.kind == train::ModelKind::kMlp) {
      os << "hidden = " << format_sizes(c.model.hidden) << "\noutputs = " << c.model.outputs << "\n";
    } else {
      os << "bias = " << (c.model.bias ? "true" : "false") << "\n";
    }
  }
  os << "\n[objective]\nvariants = ";
  for (std::size_t i = 0; i < c.variants.size(); ++i) os << (i ? "," : "") << variant_text(c.variants[i]);
  os << "\n";
  if (!c.variants.empty()) {
    const LossSpec& l = c.variants.front().objective.loss;
    os << "loss = " << to_string(l.kind) << "\nhuber_delta = " << fmt(l.delta) << "\ntilt = " << fmt(l.tilt) << "\n";
  }
  os << "\n[train]\n"
     << "epochs = " << c.train.epochs << "\n"
     << "batch_size = " << c.train.batch_size << "\n";
  if (c.train.schedule.empty()) {
    os << "lr = " << fmt(c.train.lr) << "\n";
  } else {
    os << "schedule = " << format_schedule(c.train.schedule) << "\n";
  }
  os << "optimizer = " << train::to_string(c.train.optimizer) << "\n"
     << "tolerance = " << (c.train.grad_tolerance ? fmt(*c.train.grad_tolerance) : std::string("none")) << "\n"
     << "max_iterations = " << c.train.max_iterations << "\n"
     << "grad_norm_every = " << c.train.grad_norm_every << "\n";
  if (c.train.optimizer == train::OptimizerKind::kAdam) {
    os << "adam_beta1 = " << fmt(c.train.adam.beta1) << "\nadam_beta2 = " << fmt(c.train.adam.beta2)
       << "\nadam_eps = " << fmt(c.train.adam.eps) << "\n";
  }
  os << "\n[sweep.lambda]\nvalues = " << format_list(c.lambdas) << "\n"
     << "\n[sweep.noise]\nvalues = " << format_list(c.noises) << "\n"
     << "\n[sweep.fraction]\nvalues = " << format_list(c.fractions) << "\n";
  return os.str();
}

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  for (const std::string& piece : split(text, ',')) out.push_back(to_double("list", piece));
  if (out.empty()) throw ConfigError("empty value list");
  return out;
}

std::string format_list(const std::vector<double>& values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ",";
    out += fmt(v);
  }
  return out;
}

}  // namespace dair::harness
