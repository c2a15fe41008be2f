#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dair/autodiff/tensor.hpp"

namespace dair::data {

/// An original example, its optional augmented twin, and the shared label.
struct PairedSample {
  ad::Tensor original;
  std::optional<ad::Tensor> augmented;
  double label = 0.0;
  std::size_t pairing_id = 0;
};

/// Indexed stream of paired samples. Originals are fixed; twins may change
/// with the epoch when the source regenerates them. Implementations must be
/// safe to read from several threads.
class PairedSource {
 public:
  virtual ~PairedSource() = default;

  virtual std::size_t size() const = 0;
  // Per-sample feature extents, e.g. {2} or {3, 28, 28}.
  virtual const ad::Shape& feature_shape() const = 0;
  virtual double label(std::size_t i) const = 0;
  virtual bool has_twin(std::size_t i) const = 0;
  virtual void write_original(std::size_t i, std::span<double> out) const = 0;
  // Only valid when has_twin(i).
  virtual void write_augmented(std::size_t i, std::size_t epoch, std::span<double> out) const = 0;

  std::size_t feature_size() const { return ad::shape_size(feature_shape()); }
  std::size_t paired_count() const;
  PairedSample sample(std::size_t i, std::size_t epoch = 0) const;
};

/// Source over samples held in memory; twins are fixed.
class VectorSource final : public PairedSource {
 public:
  // Throws ShapeError when feature shapes differ between samples or twins.
  explicit VectorSource(std::vector<PairedSample> samples);

  std::size_t size() const override { return samples_.size(); }
  const ad::Shape& feature_shape() const override { return shape_; }
  double label(std::size_t i) const override { return samples_.at(i).label; }
  bool has_twin(std::size_t i) const override { return samples_.at(i).augmented.has_value(); }
  void write_original(std::size_t i, std::span<double> out) const override;
  void write_augmented(std::size_t i, std::size_t epoch, std::span<double> out) const override;

  const std::vector<PairedSample>& samples() const { return samples_; }

 private:
  std::vector<PairedSample> samples_;
  ad::Shape shape_;
};

/// Mask with exactly round(fraction * n) ones at seeded positions.
/// fraction outside [0,1] -> DomainError.
std::vector<std::uint8_t> select_paired(std::size_t n, double fraction, std::uint64_t seed);

/// Copies `samples`, dropping twins outside a seeded round(fraction * n) subset.
std::vector<PairedSample> apply_fraction(std::vector<PairedSample> samples, double fraction, std::uint64_t seed);

}  // namespace dair::data
