#include "dair/train/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "dair/errors.hpp"
#include "dair/rng.hpp"

namespace dair::train {
namespace {

struct Layer {
  std::string name;
  ad::Shape shape;
  std::size_t fan_in;
};

std::vector<Layer> layers(const ModelSpec& spec) {
  std::vector<Layer> out;
  auto dense = [&](const std::string& tag, std::size_t in, std::size_t width) {
    out.push_back({tag + ".w", {width, in}, in});
    out.push_back({tag + ".b", {width}, in});
  };
  switch (spec.kind) {
    case ModelKind::kLinear:
    case ModelKind::kLogistic:
      out.push_back({"w", {1, spec.inputs}, spec.inputs});
      if (spec.bias) out.push_back({"b", {1}, spec.inputs});
      break;
    case ModelKind::kMlp: {
      std::size_t in = spec.inputs;
      for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        dense("fc" + std::to_string(i + 1), in, spec.hidden[i]);
        in = spec.hidden[i];
      }
      dense("out", in, spec.outputs);
      break;
    }
    case ModelKind::kCnn: {
      const std::size_t c = spec.in_channels;
      out.push_back({"conv1.w", {6, c, 4, 4}, c * 16});
      out.push_back({"conv1.b", {6}, c * 16});
      out.push_back({"conv2.w", {16, 6, 4, 4}, 6 * 16});
      out.push_back({"conv2.b", {16}, 6 * 16});
      out.push_back({"conv3.w", {96, 16, 4, 4}, 16 * 16});
      out.push_back({"conv3.b", {96}, 16 * 16});
      dense("fc1", 96, 64);
      dense("fc2", 64, spec.outputs);
      break;
    }
  }
  return out;
}

void validate(const ModelSpec& spec) {
  const bool flat = spec.kind != ModelKind::kCnn;
  if (flat && spec.inputs == 0) throw ConfigError("model needs at least one input feature");
  if ((spec.kind == ModelKind::kMlp || spec.kind == ModelKind::kCnn) && spec.outputs == 0) {
    throw ConfigError("model needs at least one output");
  }
  if (spec.kind == ModelKind::kCnn && spec.in_channels == 0) throw ConfigError("cnn needs at least one channel");
  for (std::size_t h : spec.hidden) {
    if (h == 0) throw ConfigError("mlp hidden widths must be positive");
  }
}

}  // namespace

std::size_t ModelSpec::output_width() const {
  return (kind == ModelKind::kLinear || kind == ModelKind::kLogistic) ? 1 : outputs;
}

ad::Shape ModelSpec::input_shape() const {
  if (kind == ModelKind::kCnn) return {in_channels, 28, 28};
  return {inputs};
}

std::string ModelSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case ModelKind::kLinear: os << "linear(" << inputs << (bias ? ",bias" : "") << ")"; break;
    case ModelKind::kLogistic: os << "logistic(" << inputs << (bias ? ",bias" : "") << ")"; break;
    case ModelKind::kMlp:
      os << "mlp(" << inputs;
      for (std::size_t h : hidden) os << "," << h;
      os << "," << outputs << ")";
      break;
    case ModelKind::kCnn: os << "cnn(" << in_channels << "->" << outputs << ")"; break;
  }
  return os.str();
}

ad::ParamSet init_params(const ModelSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng = make_rng(seed, {stream::kInit});
  ad::ParamSet params;
  for (const Layer& l : layers(spec)) {
    const double r = std::sqrt(1.0 / static_cast<double>(l.fan_in));
    std::uniform_real_distribution<double> u(-r, r);
    std::vector<double> v(ad::shape_size(l.shape));
    for (double& x : v) x = u(rng);
    params.add(l.name, ad::Tensor(l.shape, std::move(v)));
  }
  return params;
}

ad::Var apply_model(const ModelSpec& spec, ad::Tape& tape, ad::Var x) {
  using namespace ad;
  const std::size_t n = x.shape().at(0);
  auto dense_layer = [&](const std::string& tag, Var in) { return dense(in, tape.param(tag + ".w"), tape.param(tag + ".b")); };
  switch (spec.kind) {
    case ModelKind::kLinear:
    case ModelKind::kLogistic: {
      Var flat = x.shape().size() == 2 ? x : flatten(x);
      Var b = spec.bias ? tape.param("b") : tape.constant(Tensor::zeros({1}));
      return dense(flat, tape.param("w"), b);
    }
    case ModelKind::kMlp: {
      Var h = x.shape().size() == 2 ? x : flatten(x);
      for (std::size_t i = 0; i < spec.hidden.size(); ++i) h = relu(dense_layer("fc" + std::to_string(i + 1), h));
      return dense_layer("out", h);
    }
    case ModelKind::kCnn: {
      if (x.shape().size() != 4) x = reshape(x, {n, spec.in_channels, 28, 28});
      Var h = max_pool2(relu(conv2d(x, tape.param("conv1.w"), tape.param("conv1.b"))));
      h = max_pool2(relu(conv2d(h, tape.param("conv2.w"), tape.param("conv2.b"))));
      h = relu(conv2d(h, tape.param("conv3.w"), tape.param("conv3.b")));
      h = relu(dense_layer("fc1", flatten(h)));
      return dense_layer("fc2", h);
    }
  }
  throw ConfigError("unknown model kind");
}

}  // namespace dair::train
