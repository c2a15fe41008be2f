#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dair/autodiff/ops.hpp"

namespace dair::train {

enum class ModelKind { kLinear, kLogistic, kMlp, kCnn };

/// Model family. linear/logistic map d features to one output; mlp stacks
/// dense+ReLU layers; cnn is the fixed 28x28 convolutional pipeline
///   conv 4x4x6, ReLU, pool, conv 4x4x16, ReLU, pool, conv 4x4x96, ReLU,
///   dense 64, ReLU, dense C.
struct ModelSpec {
  ModelKind kind = ModelKind::kLinear;
  std::size_t inputs = 1;           // feature count (linear/logistic/mlp)
  bool bias = false;                // linear/logistic only
  std::vector<std::size_t> hidden;  // mlp hidden widths
  std::size_t outputs = 1;          // mlp/cnn output width C
  std::size_t in_channels = 1;      // cnn

  static ModelSpec linear(std::size_t d, bool bias = false) { return {ModelKind::kLinear, d, bias, {}}; }
  static ModelSpec logistic(std::size_t d, bool bias = false) { return {ModelKind::kLogistic, d, bias, {}}; }
  static ModelSpec mlp(std::size_t d, std::vector<std::size_t> hidden, std::size_t outputs) {
    return {ModelKind::kMlp, d, true, std::move(hidden), outputs};
  }
  static ModelSpec cnn(std::size_t outputs, std::size_t in_channels) {
    return {ModelKind::kCnn, 0, true, {}, outputs, in_channels};
  }

  std::size_t output_width() const;
  // Per-sample input extents the model expects.
  ad::Shape input_shape() const;
  std::string describe() const;
};

/// Parameters drawn uniformly in +-sqrt(1/fan_in) per layer from `seed`.
ad::ParamSet init_params(const ModelSpec& spec, std::uint64_t seed);

/// Forward pass of a batch x:[N, input_shape...] -> [N, output_width].
ad::Var apply_model(const ModelSpec& spec, ad::Tape& tape, ad::Var x);

}  // namespace dair::train
