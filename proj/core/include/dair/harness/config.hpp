#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dair/data/mnist.hpp"
#include "dair/data/synthetic.hpp"
#include "dair/objectives.hpp"
#include "dair/oracles.hpp"
#include "dair/train/trainer.hpp"

namespace dair::harness {

enum class DatasetKind { kToyRegression, kToyLogistic, kColored, kRotated, kRobustRegression };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view text);

struct MnistPaths {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;

  bool complete() const;
  // Standard file names under `dir`.
  static MnistPaths in_dir(const std::filesystem::path& dir);
};

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kToyRegression;
  std::size_t n_train = 1000;
  std::size_t n_test = 1000;
  ToyRegressionParams toy;
  double var_x = 1.0;   // toy-logistic
  double var_t1 = 0.0;  // toy-logistic
  double var_t2 = 1.0;  // toy-logistic
  data::RobustRegressionParams robust;
  data::Scheme train_scheme = data::Scheme::kR1;
  data::Scheme aug_scheme = data::Scheme::kR5;
  data::Scheme test_scheme = data::Scheme::kR2;
  // Label noise comes from the noise sweep axis; for the robust-regression
  // set it is the target corruption fraction.
  bool noise_at_test = false;
  bool regenerate_each_epoch = true;
  MnistPaths mnist;
};

/// One objective compared within an experiment, e.g. "erm" or "dair-sq".
struct Variant {
  std::string name;
  ObjectiveSpec objective;
};

enum class SweepAxis { kLambda, kNoise, kFraction };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_axis(std::string_view text);

struct ExperimentConfig {
  std::string preset;
  DatasetConfig dataset;
  train::ModelSpec model;
  std::vector<Variant> variants;
  train::TrainConfig train;
  train::Task task = train::Task::kAccuracy;
  std::vector<double> lambdas{0.0};
  std::vector<double> noises{0.0};
  std::vector<double> fractions{1.0};
  std::size_t replicates = 1;
  std::uint64_t base_seed = 2024;
  std::filesystem::path out_dir = "results";
  std::size_t parallel = 1;

  // Throws ConfigError on empty axes, zero replicates, bad values or, for
  // MNIST datasets, missing IDX files.
  void validate() const;
  const std::vector<double>& axis_values(SweepAxis axis) const;
};

/// Overrides fields of `base` from an INI file; keys documented in
/// docs/config_schema.md. Unknown keys raise ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);
ExperimentConfig parse_config(std::string_view ini_text, ExperimentConfig base);

/// Resolved configuration in the same INI format.
std::string echo_config(const ExperimentConfig& cfg);

std::vector<double> parse_list(std::string_view text);
std::string format_list(const std::vector<double>& values);

}  // namespace dair::harness
