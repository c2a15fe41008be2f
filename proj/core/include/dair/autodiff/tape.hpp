#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dair/autodiff/param_set.hpp"
#include "dair/autodiff/tensor.hpp"

namespace dair::ad {

namespace detail {
struct TapeImpl;
}

class Tape;
struct BackwardArgs;
using BackwardFn = std::function<void(const BackwardArgs&)>;

/// Handle to one node of a tape. Cheap to copy; only valid while the tape
/// that produced it is alive.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return impl_ != nullptr; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  friend class Tape;
  friend Var record_op(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Var(detail::TapeImpl* impl, std::size_t id) : impl_(impl), id_(id) {}

  detail::TapeImpl* impl_ = nullptr;
  std::size_t id_ = 0;
};

/// Arguments handed to a primitive's backward rule. `in_grads[k]` is null when
/// input k does not need a gradient; otherwise it is a zero-initialised (or
/// partially accumulated) tensor shaped like the input, and the rule adds its
/// contribution into it.
struct BackwardArgs {
  std::span<const Tensor* const> inputs;
  const Tensor& output;
  const Tensor& out_grad;
  std::span<Tensor* const> in_grads;
};

/// Appends a primitive node to the tape that owns `inputs` (which must be
/// non-empty and share one tape). The primitives in ops.hpp are built on it.
Var record_op(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);

/// Ordered record of primitive applications. Nodes are appended in evaluation
/// order, so every input reference precedes its consumer and a reverse sweep
/// is a valid topological order.
///
/// A tape is bound to at most one ParamSet. `param()` creates leaves that read
/// from it, and `backward` refuses to run if that ParamSet has been mutated
/// since the tape was recorded.
class Tape {
 public:
  Tape();
  explicit Tape(const ParamSet& params);
  Tape(Tape&&) noexcept;
  Tape& operator=(Tape&&) noexcept;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  Var constant(Tensor value);
  Var param(std::string_view name);
  Var param(std::size_t group);

  // Appends a primitive node. Used by the functions in ops.hpp; custom
  // primitives can be added the same way.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);

  std::size_t size() const noexcept;
  const Tensor& value(Var v) const;
  std::string_view op_name(std::size_t node) const;
  std::vector<std::size_t> inputs_of(std::size_t node) const;
  const ParamSet* bound_params() const noexcept;

  friend ParamSet backward(const Tape& tape, Var output, const ParamSet& params, double seed);

 private:
  void check_owns(Var v) const;

  std::unique_ptr<detail::TapeImpl> impl_;
};

/// Reverse sweep from a single-element output. Returns the gradient with the
/// same names and shapes as `params`. Throws DomainError when `params` is not
/// the ParamSet the tape was recorded against or has been mutated since.
ParamSet backward(const Tape& tape, Var output, const ParamSet& params, double seed = 1.0);

using GraphFn = std::function<Var(Tape&, std::span<const Var>)>;

struct Recording {
  Tape tape;
  Var output;

  const Tensor& value() const { return output.value(); }
};

/// Evaluates `graph` on constant inputs against `params`, keeping the tape.
Recording forward(const GraphFn& graph, std::span<const Tensor> inputs, const ParamSet& params);

}  // namespace dair::ad
