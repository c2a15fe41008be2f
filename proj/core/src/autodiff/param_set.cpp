#include "dair/autodiff/param_set.hpp"

#include <cmath>

#include "dair/errors.hpp"

namespace dair::ad {

void ParamSet::add(std::string name, Tensor value) {
  if (contains(name)) throw DomainError("duplicate parameter name '" + name + "'");
  entries_.push_back({std::move(name), std::move(value)});
  ++version_;
}

bool ParamSet::contains(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

std::size_t ParamSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw DomainError("unknown parameter '" + std::string(name) + "'");
}

const Tensor& ParamSet::get(std::string_view name) const { return entries_[index_of(name)].value; }

Tensor& ParamSet::mutable_at(std::size_t index) {
  ++version_;
  return entries_.at(index).value;
}

Tensor& ParamSet::mutable_get(std::string_view name) { return mutable_at(index_of(name)); }

std::size_t ParamSet::total_size() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& e : entries_) {
    flat.insert(flat.end(), e.value.values().begin(), e.value.values().end());
  }
  return flat;
}

void ParamSet::assign_flat(std::span<const double> flat) {
  if (flat.size() != total_size()) {
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                     " values, expected " + std::to_string(total_size()));
  }
  std::size_t offset = 0;
  for (auto& e : entries_) {
    auto dst = e.value.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = flat[offset + i];
    offset += dst.size();
  }
  ++version_;
}

std::pair<std::size_t, std::size_t> ParamSet::locate(std::size_t flat_index) const {
  std::size_t offset = 0;
  for (std::size_t g = 0; g < entries_.size(); ++g) {
    const std::size_t n = entries_[g].value.size();
    if (flat_index < offset + n) return {g, flat_index - offset};
    offset += n;
  }
  throw DomainError("flat parameter index " + std::to_string(flat_index) + " out of range");
}

double ParamSet::flat_value(std::size_t flat_index) const {
  auto [g, i] = locate(flat_index);
  return entries_[g].value[i];
}

void ParamSet::set_flat_value(std::size_t flat_index, double value) {
  auto [g, i] = locate(flat_index);
  entries_[g].value[i] = value;
  ++version_;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& e : entries_) out.add(e.name, Tensor::zeros(e.value.shape()));
  return out;
}

double ParamSet::l2_norm() const {
  double sum = 0.0;
  for (const auto& e : entries_) {
    for (double v : e.value.values()) sum += v * v;
  }
  return std::sqrt(sum);
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    if (a.entries_[i].name != b.entries_[i].name) return false;
    if (!(a.entries_[i].value == b.entries_[i].value)) return false;
  }
  return true;
}

}  // namespace dair::ad
