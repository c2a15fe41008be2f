#include "dair/data/mnist.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "dair/errors.hpp"

namespace dair::data {
namespace {

struct SchemeName {
  Scheme scheme;
  std::string_view name;
};

constexpr std::array<SchemeName, 12> kNames{{
    {Scheme::kC1, "C1"}, {Scheme::kC2, "C2"}, {Scheme::kC3, "C3"}, {Scheme::kC4, "C4"},
    {Scheme::kR1, "R1"}, {Scheme::kR2, "R2"}, {Scheme::kR3, "R3"}, {Scheme::kR4, "R4"},
    {Scheme::kR5, "R5"}, {Scheme::kR6, "R6"}, {Scheme::kRotWeak, "weak"}, {Scheme::kRotStrong, "strong"},
}};

void require_family(Scheme s, SchemeFamily f, const char* op) {
  if (family(s) != f) {
    throw DomainError(std::string(op) + ": scheme " + std::string(to_string(s)) + " belongs to the wrong family");
  }
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

bool coin(Rng& rng) { return std::uniform_int_distribution<int>(0, 1)(rng) == 1; }

}  // namespace

SchemeFamily family(Scheme s) {
  switch (s) {
    case Scheme::kC1:
    case Scheme::kC2:
    case Scheme::kC3:
    case Scheme::kC4:
      return SchemeFamily::kColor;
    default:
      return SchemeFamily::kRotation;
  }
}

std::string_view to_string(Scheme s) {
  for (const auto& n : kNames) {
    if (n.scheme == s) return n.name;
  }
  return "?";
}

Scheme parse_scheme(std::string_view text) {
  for (const auto& n : kNames) {
    if (n.name == text) return n.scheme;
  }
  throw ConfigError("unknown scheme '" + std::string(text) + "'");
}

std::size_t channels(Scheme s) { return family(s) == SchemeFamily::kColor ? 3 : 1; }

double color_match_probability(Scheme s) {
  switch (s) {
    case Scheme::kC1: return 0.8;
    case Scheme::kC2: return 0.9;
    case Scheme::kC3: return 0.1;
    default: throw DomainError("scheme " + std::string(to_string(s)) + " has no color probability");
  }
}

int draw_color_index(Scheme s, int binary_label, Rng& rng) {
  require_family(s, SchemeFamily::kColor, "colorize");
  if (binary_label != 0 && binary_label != 1) throw DomainError("colorize: label must be 0 or 1");
  if (s == Scheme::kC4) return 2;
  return uniform(rng, 0.0, 1.0) < color_match_probability(s) ? binary_label : 1 - binary_label;
}

void colorize_into(const RawDigit& d, Scheme s, int binary_label, Rng& rng, std::span<double> out,
                   std::optional<double> match_p) {
  require_family(s, SchemeFamily::kColor, "colorize");
  if (out.size() != 3 * kPixels) throw ShapeError("colorize: output must hold 3x28x28 values");
  std::array<double, 3> rgb{0.0, 0.0, 0.0};
  if (s == Scheme::kC4) {
    std::uniform_int_distribution<int> byte(0, 255);
    for (double& c : rgb) c = byte(rng) / 255.0;
  } else {
    if (binary_label != 0 && binary_label != 1) throw DomainError("colorize: label must be 0 or 1");
    const double p = match_p.value_or(color_match_probability(s));
    const int z = uniform(rng, 0.0, 1.0) < p ? binary_label : 1 - binary_label;
    rgb[z == 0 ? 0 : 1] = 1.0;
  }
  for (std::size_t c = 0; c < 3; ++c) {
    double* dst = out.data() + c * kPixels;
    for (std::size_t p = 0; p < kPixels; ++p) dst[p] = rgb[c] * d.pixels[p];
  }
}

ad::Tensor colorize(const RawDigit& d, Scheme s, int binary_label, Rng& rng) {
  ad::Tensor t = ad::Tensor::zeros({3, kSide, kSide});
  colorize_into(d, s, binary_label, rng, t.values());
  return t;
}

double draw_angle(Scheme s, Rng& rng) {
  require_family(s, SchemeFamily::kRotation, "rotate");
  switch (s) {
    case Scheme::kR1: return 0.0;
    case Scheme::kR2: return 90.0;
    case Scheme::kR3: return coin(rng) ? 180.0 : 0.0;
    case Scheme::kR4: return coin(rng) ? 270.0 : 90.0;
    case Scheme::kR5: return uniform(rng, 0.0, 360.0);
    case Scheme::kR6: {
      const double base = coin(rng) ? 202.5 : 22.5;
      return base + uniform(rng, 0.0, 45.0);
    }
    case Scheme::kRotWeak: return uniform(rng, 0.0, 30.0);
    case Scheme::kRotStrong: return uniform(rng, 0.0, 360.0);
    default: break;
  }
  throw DomainError("rotate: unsupported scheme");
}

RawDigit rotate_by(const RawDigit& d, double degrees) {
  double c = 0.0, s = 0.0;
  const double q = std::fmod(std::fmod(degrees, 360.0) + 360.0, 360.0);
  if (q == 0.0) {
    c = 1.0;
  } else if (q == 90.0) {
    s = 1.0;
  } else if (q == 180.0) {
    c = -1.0;
  } else if (q == 270.0) {
    s = -1.0;
  } else {
    const double r = q * std::numbers::pi / 180.0;
    c = std::cos(r);
    s = std::sin(r);
  }
  constexpr double centre = (kSide - 1) / 2.0;
  RawDigit out;
  out.digit = d.digit;
  for (std::size_t row = 0; row < kSide; ++row) {
    for (std::size_t col = 0; col < kSide; ++col) {
      const double dy = static_cast<double>(row) - centre, dx = static_cast<double>(col) - centre;
      const long sx = std::lround(c * dx + s * dy + centre);
      const long sy = std::lround(-s * dx + c * dy + centre);
      if (sx >= 0 && sy >= 0 && sx < static_cast<long>(kSide) && sy < static_cast<long>(kSide)) {
        out.pixels[row * kSide + col] = d.pixels[static_cast<std::size_t>(sy) * kSide + static_cast<std::size_t>(sx)];
      }
    }
  }
  return out;
}

RawDigit rotate(const RawDigit& d, Scheme s, Rng& rng) { return rotate_by(d, draw_angle(s, rng)); }

std::vector<double> inject_label_noise(std::vector<double> labels, double p, NoiseMode mode, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("label noise probability must lie in [0,1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> digit(0, 9);
  for (double& y : labels) {
    const bool hit = unit(rng) < p;
    if (mode == NoiseMode::kBernoulliFlip) {
      if (y != 0.0 && y != 1.0) throw DomainError("bernoulli flip needs binary labels");
      if (hit) y = 1.0 - y;
    } else {
      const int replacement = digit(rng);
      if (hit) y = replacement;
    }
  }
  return labels;
}

int binarize_digit(int digit) {
  if (digit < 0 || digit > 9) throw DomainError("digit out of range: " + std::to_string(digit));
  return digit <= 4 ? 1 : 0;
}

int binarize_digits(const RawDigit& d) { return binarize_digit(d.digit); }

MnistSplit load_mnist(const std::filesystem::path& train_images, const std::filesystem::path& train_labels,
                      const std::filesystem::path& test_images, const std::filesystem::path& test_labels,
                      std::size_t train_count) {
  auto train = load_idx(train_images, train_labels);
  if (train.size() < train_count) {
    throw DataError("training file holds " + std::to_string(train.size()) + " digits, need " +
                    std::to_string(train_count));
  }
  train.resize(train_count);
  MnistSplit split;
  split.train = std::make_shared<const std::vector<RawDigit>>(std::move(train));
  split.test = std::make_shared<const std::vector<RawDigit>>(load_idx(test_images, test_labels));
  return split;
}

MnistSplit load_mnist_dir(const std::filesystem::path& dir, std::size_t train_count) {
  return load_mnist(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", dir / "t10k-images-idx3-ubyte",
                    dir / "t10k-labels-idx1-ubyte", train_count);
}

SchemeSource::SchemeSource(DigitSet digits, std::vector<double> labels, Options options)
    : digits_(std::move(digits)), labels_(std::move(labels)), options_(options) {
  if (!digits_ || digits_->size() != labels_.size()) throw DataError("SchemeSource: digits and labels differ in count");
  if (options_.augmenter && family(*options_.augmenter) != family(options_.original)) {
    throw DomainError("SchemeSource: original and augmenter schemes belong to different families");
  }
  if (family(options_.original) == SchemeFamily::kColor) {
    for (double y : labels_) {
      if (y != 0.0 && y != 1.0) throw DomainError("SchemeSource: color schemes need binary labels");
    }
  }
  mask_ = options_.augmenter ? select_paired(labels_.size(), options_.fraction, options_.seed)
                             : std::vector<std::uint8_t>(labels_.size(), 0);
  shape_ = {channels(options_.original), kSide, kSide};
}

void SchemeSource::render(Scheme s, std::size_t i, Rng& rng, std::span<double> out) const {
  const RawDigit& d = (*digits_)[i];
  if (family(s) == SchemeFamily::kColor) {
    colorize_into(d, s, static_cast<int>(labels_[i]), rng, out);
    return;
  }
  const RawDigit r = rotate(d, s, rng);
  std::copy(r.pixels.begin(), r.pixels.end(), out.begin());
}

void SchemeSource::write_original(std::size_t i, std::span<double> out) const {
  Rng rng = make_rng(options_.seed, {stream::kData, i});
  render(options_.original, i, rng, out);
}

void SchemeSource::write_augmented(std::size_t i, std::size_t epoch, std::span<double> out) const {
  if (!has_twin(i)) throw DataError("sample " + std::to_string(i) + " has no augmented twin");
  const std::uint64_t e = options_.regenerate_each_epoch ? epoch : 0;
  Rng rng = make_rng(options_.seed, {stream::kAugment, i, e});
  render(*options_.augmenter, i, rng, out);
}

std::unique_ptr<PairedSource> make_paired_dataset(DigitSet digits, std::vector<double> labels, Scheme original,
                                                  std::optional<Scheme> augmenter, double fraction,
                                                  bool regenerate_each_epoch, std::uint64_t seed) {
  SchemeSource::Options o;
  o.original = original;
  o.augmenter = augmenter;
  o.fraction = fraction;
  o.regenerate_each_epoch = regenerate_each_epoch;
  o.seed = seed;
  return std::make_unique<SchemeSource>(std::move(digits), std::move(labels), o);
}

}  // namespace dair::data
