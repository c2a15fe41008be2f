#include "dair/data/paired.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dair/errors.hpp"
#include "dair/rng.hpp"

namespace dair::data {

std::size_t PairedSource::paired_count() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < size(); ++i) c += has_twin(i) ? 1 : 0;
  return c;
}

PairedSample PairedSource::sample(std::size_t i, std::size_t epoch) const {
  PairedSample s;
  s.original = ad::Tensor::zeros(feature_shape());
  write_original(i, s.original.values());
  if (has_twin(i)) {
    ad::Tensor t = ad::Tensor::zeros(feature_shape());
    write_augmented(i, epoch, t.values());
    s.augmented = std::move(t);
  }
  s.label = label(i);
  s.pairing_id = i;
  return s;
}

VectorSource::VectorSource(std::vector<PairedSample> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw DataError("VectorSource: no samples");
  shape_ = samples_.front().original.shape();
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const PairedSample& s = samples_[i];
    if (s.original.shape() != shape_ || (s.augmented && s.augmented->shape() != shape_)) {
      throw ShapeError("VectorSource: sample " + std::to_string(i) + " has features " +
                       ad::shape_to_string(s.original.shape()) + ", expected " + ad::shape_to_string(shape_));
    }
  }
}

void VectorSource::write_original(std::size_t i, std::span<double> out) const {
  const auto v = samples_.at(i).original.values();
  std::copy(v.begin(), v.end(), out.begin());
}

void VectorSource::write_augmented(std::size_t i, std::size_t, std::span<double> out) const {
  const auto& twin = samples_.at(i).augmented;
  if (!twin) throw DataError("sample " + std::to_string(i) + " has no augmented twin");
  std::copy(twin->values().begin(), twin->values().end(), out.begin());
}

std::vector<std::uint8_t> select_paired(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw DomainError("augmentation fraction must lie in [0,1], got " + std::to_string(fraction));
  }
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::uint8_t> mask(n, 0);
  if (k == n) {
    std::fill(mask.begin(), mask.end(), 1);
    return mask;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, {stream::kPairing});
  // Partial Fisher-Yates: the first k entries are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
    mask[order[i]] = 1;
  }
  return mask;
}

std::vector<PairedSample> apply_fraction(std::vector<PairedSample> samples, double fraction, std::uint64_t seed) {
  const auto mask = select_paired(samples.size(), fraction, seed);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!mask[i]) samples[i].augmented.reset();
  }
  return samples;
}

}  // namespace dair::data
