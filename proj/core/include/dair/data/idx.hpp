#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dair/errors.hpp"

namespace dair::data {

inline constexpr std::size_t kSide = 28;
inline constexpr std::size_t kPixels = kSide * kSide;

/// One MNIST digit, pixels row-major in [0,1].
struct RawDigit {
  std::array<float, kPixels> pixels{};
  int digit = 0;

  float at(std::size_t row, std::size_t col) const { return pixels[row * kSide + col]; }
};

enum class IdxErrorKind { kMagic, kTruncated, kCountMismatch, kDimensions };

class IdxError : public DataError {
 public:
  IdxError(IdxErrorKind kind, const std::string& what) : DataError(what), kind_(kind) {}
  IdxErrorKind kind() const noexcept { return kind_; }

 private:
  IdxErrorKind kind_;
};

inline constexpr std::uint32_t kImagesMagic = 0x00000803;
inline constexpr std::uint32_t kLabelsMagic = 0x00000801;

/// Parses an IDX image file and label file already in memory.
std::vector<RawDigit> parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);

/// Reads both files. Unreadable files throw IoError naming the path.
std::vector<RawDigit> load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Serialises digits back to IDX bytes (used for fixtures).
std::vector<std::uint8_t> encode_idx_images(std::span<const RawDigit> digits);
std::vector<std::uint8_t> encode_idx_labels(std::span<const RawDigit> digits);

}  // namespace dair::data
