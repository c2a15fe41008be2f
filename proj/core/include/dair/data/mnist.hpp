#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dair/data/idx.hpp"
#include "dair/data/paired.hpp"
#include "dair/rng.hpp"

namespace dair::data {

enum class Scheme {
  kC1, kC2, kC3, kC4,
  kR1, kR2, kR3, kR4, kR5, kR6,
  kRotWeak,    // uniform in [0, 30) degrees
  kRotStrong,  // uniform in [0, 360) degrees
};

enum class SchemeFamily { kColor, kRotation };

SchemeFamily family(Scheme s);
std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view text);
// 3 for color schemes, 1 for rotations.
std::size_t channels(Scheme s);

// Probability that the color index equals the label (C1..C3).
double color_match_probability(Scheme s);

/// Color index: 0 red, 1 green, 2 random RGB (C4). For C1..C3 the index is
/// y with the scheme's probability and 1-y otherwise.
int draw_color_index(Scheme s, int binary_label, Rng& rng);

/// Paints the digit into out[3*28*28] (channel-major RGB). `match_p`
/// overrides the scheme's probability when set.
void colorize_into(const RawDigit& d, Scheme s, int binary_label, Rng& rng, std::span<double> out,
                   std::optional<double> match_p = std::nullopt);
ad::Tensor colorize(const RawDigit& d, Scheme s, int binary_label, Rng& rng);

/// Angle in degrees drawn from a rotation scheme.
double draw_angle(Scheme s, Rng& rng);
/// Nearest-neighbour rotation about the image centre; multiples of 90 degrees
/// are exact permutations.
RawDigit rotate_by(const RawDigit& d, double degrees);
RawDigit rotate(const RawDigit& d, Scheme s, Rng& rng);

enum class NoiseMode { kUniformReplace10, kBernoulliFlip };

/// Each label is corrupted independently with probability p.
std::vector<double> inject_label_noise(std::vector<double> labels, double p, NoiseMode mode, Rng& rng);

/// 1 for digits 0-4, 0 for 5-9.
int binarize_digits(const RawDigit& d);
int binarize_digit(int digit);

using DigitSet = std::shared_ptr<const std::vector<RawDigit>>;

struct MnistSplit {
  DigitSet train;
  DigitSet test;
};

/// Loads the four IDX files and keeps the first `train_count` training digits.
MnistSplit load_mnist(const std::filesystem::path& train_images, const std::filesystem::path& train_labels,
                      const std::filesystem::path& test_images, const std::filesystem::path& test_labels,
                      std::size_t train_count = 20000);
/// Same, with the standard file names under `dir`.
MnistSplit load_mnist_dir(const std::filesystem::path& dir, std::size_t train_count = 20000);

/// Digits rendered through a scheme on demand. The original view of sample i
/// is fixed by (seed, i); its twin by (seed, i, epoch) when regenerating and
/// by (seed, i) otherwise.
class SchemeSource final : public PairedSource {
 public:
  struct Options {
    Scheme original = Scheme::kR1;
    std::optional<Scheme> augmenter;
    double fraction = 1.0;
    bool regenerate_each_epoch = true;
    std::uint64_t seed = 0;
  };

  // `labels` are task labels (binary for color schemes, digit otherwise);
  // color schemes paint from these labels.
  SchemeSource(DigitSet digits, std::vector<double> labels, Options options);

  std::size_t size() const override { return labels_.size(); }
  const ad::Shape& feature_shape() const override { return shape_; }
  double label(std::size_t i) const override { return labels_.at(i); }
  bool has_twin(std::size_t i) const override { return mask_.at(i) != 0; }
  void write_original(std::size_t i, std::span<double> out) const override;
  void write_augmented(std::size_t i, std::size_t epoch, std::span<double> out) const override;

  const Options& options() const { return options_; }

 private:
  void render(Scheme s, std::size_t i, Rng& rng, std::span<double> out) const;

  DigitSet digits_;
  std::vector<double> labels_;
  Options options_;
  std::vector<std::uint8_t> mask_;
  ad::Shape shape_;
};

/// make_paired_dataset over MNIST digits: wraps SchemeSource.
std::unique_ptr<PairedSource> make_paired_dataset(DigitSet digits, std::vector<double> labels, Scheme original,
                                                  std::optional<Scheme> augmenter, double fraction,
                                                  bool regenerate_each_epoch, std::uint64_t seed);

}  // namespace dair::data
