#include "dair/autodiff/tape.hpp"

#include <cmath>
#include <optional>

#include "dair/errors.hpp"

namespace dair::ad {
namespace detail {

struct Node {
  std::string op;
  Tensor value;
  std::vector<std::size_t> inputs;
  BackwardFn backward;
  std::optional<std::size_t> param_group;
  bool requires_grad = false;
};

struct TapeImpl {
  std::vector<Node> nodes;
  const ParamSet* params = nullptr;
  std::uint64_t params_version = 0;
};

}  // namespace detail

const Tensor& Var::value() const {
  if (impl_ == nullptr) throw DomainError("use of an unset Var");
  return impl_->nodes.at(id_).value;
}

bool Var::requires_grad() const {
  if (impl_ == nullptr) throw DomainError("use of an unset Var");
  return impl_->nodes.at(id_).requires_grad;
}

Tape::Tape() : impl_(std::make_unique<detail::TapeImpl>()) {}

Tape::Tape(const ParamSet& params) : Tape() {
  impl_->params = &params;
  impl_->params_version = params.version();
}

Tape::Tape(Tape&&) noexcept = default;
Tape& Tape::operator=(Tape&&) noexcept = default;
Tape::~Tape() = default;

Var Tape::constant(Tensor value) {
  detail::Node node;
  node.op = "constant";
  node.value = std::move(value);
  impl_->nodes.push_back(std::move(node));
  return Var(impl_.get(), impl_->nodes.size() - 1);
}

Var Tape::param(std::string_view name) {
  if (impl_->params == nullptr) throw DomainError("tape is not bound to a parameter set");
  return param(impl_->params->index_of(name));
}

Var Tape::param(std::size_t group) {
  if (impl_->params == nullptr) throw DomainError("tape is not bound to a parameter set");
  if (impl_->params->version() != impl_->params_version) {
    throw DomainError("parameter set mutated while recording a tape");
  }
  detail::Node node;
  node.op = "param:" + impl_->params->name(group);
  node.value = impl_->params->at(group);
  node.param_group = group;
  node.requires_grad = true;
  impl_->nodes.push_back(std::move(node));
  return Var(impl_.get(), impl_->nodes.size() - 1);
}

void Tape::check_owns(Var v) const {
  if (v.impl_ != impl_.get()) throw DomainError("Var belongs to a different tape");
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  for (const Var& in : inputs) check_owns(in);
  if (inputs.empty()) {
    Var v = constant(std::move(value));
    impl_->nodes.back().op = std::string(op);
    return v;
  }
  return record_op(op, std::move(value), inputs, std::move(backward));
}

Var record_op(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (inputs.empty()) throw DomainError(std::string(op) + ": primitive needs at least one input");
  detail::TapeImpl* impl = inputs.front().impl_;
  if (impl == nullptr) throw DomainError(std::string(op) + ": use of an unset Var");
  detail::Node node;
  node.op = std::string(op);
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.impl_ != impl) throw DomainError(std::string(op) + ": inputs come from different tapes");
    node.inputs.push_back(in.id_);
    node.requires_grad = node.requires_grad || impl->nodes[in.id_].requires_grad;
  }
  node.backward = std::move(backward);
  impl->nodes.push_back(std::move(node));
  return Var(impl, impl->nodes.size() - 1);
}

std::size_t Tape::size() const noexcept { return impl_->nodes.size(); }

const Tensor& Tape::value(Var v) const {
  check_owns(v);
  return impl_->nodes[v.id_].value;
}

std::string_view Tape::op_name(std::size_t node) const { return impl_->nodes.at(node).op; }

std::vector<std::size_t> Tape::inputs_of(std::size_t node) const { return impl_->nodes.at(node).inputs; }

const ParamSet* Tape::bound_params() const noexcept { return impl_->params; }

ParamSet backward(const Tape& tape, Var output, const ParamSet& params, double seed) {
  const auto& impl = *tape.impl_;
  tape.check_owns(output);
  if (impl.params != &params) {
    throw DomainError("backward: parameter set differs from the one the tape was recorded against");
  }
  if (params.version() != impl.params_version) {
    throw DomainError("backward: tape replayed against mutated parameters");
  }
  if (!std::isfinite(seed)) throw NumericError("backward: seed gradient must be finite");
  const auto& out_node = impl.nodes[output.id()];
  if (out_node.value.size() != 1) {
    throw ShapeError("backward: output must be a single element, got " +
                     shape_to_string(out_node.value.shape()));
  }

  ParamSet grads = params.zeros_like();
  std::vector<Tensor> node_grads(output.id() + 1);
  node_grads[output.id()] = Tensor::filled(out_node.value.shape(), seed);

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    const auto& node = impl.nodes[i];
    if (!node.requires_grad || node_grads[i].empty()) continue;
    if (node.param_group) {
      auto dst = grads.mutable_at(*node.param_group).values();
      auto src = node_grads[i].values();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      continue;
    }
    if (!node.backward) continue;
    in_values.clear();
    in_grads.clear();
    for (std::size_t in : node.inputs) {
      in_values.push_back(&impl.nodes[in].value);
      if (impl.nodes[in].requires_grad) {
        if (node_grads[in].empty()) node_grads[in] = Tensor::zeros(impl.nodes[in].value.shape());
        in_grads.push_back(&node_grads[in]);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    node.backward(BackwardArgs{in_values, node.value, node_grads[i], in_grads});
    // Interior gradients are dead once propagated.
    node_grads[i] = Tensor();
  }
  return grads;
}

Recording forward(const GraphFn& graph, std::span<const Tensor> inputs, const ParamSet& params) {
  Recording rec{Tape(params), Var()};
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs) vars.push_back(rec.tape.constant(t));
  rec.output = graph(rec.tape, vars);
  return rec;
}

}  // namespace dair::ad
