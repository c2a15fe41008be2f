#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dair/autodiff/tensor.hpp"

namespace dair::ad {

/// Ordered collection of named parameter tensors (weights and biases per
/// layer). Gradients returned by `backward` use the same type and layout.
///
/// Every mutable access bumps `version()`, which lets a tape detect that the
/// parameters it was recorded against have since changed.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  // Throws DomainError when the name is already taken.
  void add(std::string name, Tensor value);

  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  const Tensor& get(std::string_view name) const;
  const Tensor& at(std::size_t index) const { return entries_.at(index).value; }
  const std::string& name(std::size_t index) const { return entries_.at(index).name; }
  Tensor& mutable_at(std::size_t index);
  Tensor& mutable_get(std::string_view name);

  std::size_t group_count() const noexcept { return entries_.size(); }
  std::size_t total_size() const noexcept;
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  std::vector<double> flatten() const;
  // Overwrites all values from a flat vector laid out as `flatten()` does.
  void assign_flat(std::span<const double> flat);
  double flat_value(std::size_t flat_index) const;
  void set_flat_value(std::size_t flat_index, double value);

  // Same names and shapes, all values zero.
  ParamSet zeros_like() const;

  // Euclidean norm over every value.
  double l2_norm() const;

  std::uint64_t version() const noexcept { return version_; }

  friend bool operator==(const ParamSet& a, const ParamSet& b);

 private:
  std::pair<std::size_t, std::size_t> locate(std::size_t flat_index) const;

  std::vector<Entry> entries_;
  std::uint64_t version_ = 0;
};

}  // namespace dair::ad
