#include "dair/data/idx.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace dair::data {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* file) {
  if (bytes.size() < offset + 4) {
    throw IdxError(IdxErrorKind::kTruncated, std::string(file) + ": header truncated at byte " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

}  // namespace

std::vector<RawDigit> parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
  const std::uint32_t im_magic = read_be32(images, 0, "images");
  if (im_magic != kImagesMagic) {
    throw IdxError(IdxErrorKind::kMagic, "images: bad magic " + std::to_string(im_magic));
  }
  const std::uint32_t lb_magic = read_be32(labels, 0, "labels");
  if (lb_magic != kLabelsMagic) {
    throw IdxError(IdxErrorKind::kMagic, "labels: bad magic " + std::to_string(lb_magic));
  }
  const std::uint32_t n = read_be32(images, 4, "images");
  const std::uint32_t rows = read_be32(images, 8, "images");
  const std::uint32_t cols = read_be32(images, 12, "images");
  const std::uint32_t n_labels = read_be32(labels, 4, "labels");
  if (rows != kSide || cols != kSide) {
    throw IdxError(IdxErrorKind::kDimensions,
                   "images: expected 28x28, got " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (n != n_labels) {
    throw IdxError(IdxErrorKind::kCountMismatch,
                   "image count " + std::to_string(n) + " differs from label count " + std::to_string(n_labels));
  }
  const std::size_t im_need = 16 + std::size_t{n} * kPixels;
  if (images.size() < im_need) {
    throw IdxError(IdxErrorKind::kTruncated, "images: payload has " + std::to_string(images.size()) +
                                                 " bytes, header implies " + std::to_string(im_need));
  }
  if (labels.size() < 8 + std::size_t{n}) {
    throw IdxError(IdxErrorKind::kTruncated, "labels: payload shorter than " + std::to_string(n) + " entries");
  }
  std::vector<RawDigit> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* px = images.data() + 16 + i * kPixels;
    for (std::size_t p = 0; p < kPixels; ++p) out[i].pixels[p] = static_cast<float>(px[p]) / 255.0f;
    const int d = labels[8 + i];
    if (d > 9) throw IdxError(IdxErrorKind::kDimensions, "labels: digit " + std::to_string(d) + " at " + std::to_string(i));
    out[i].digit = d;
  }
  return out;
}

std::vector<RawDigit> load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto im = slurp(images);
  const auto lb = slurp(labels);
  try {
    return parse_idx(im, lb);
  } catch (const IdxError& e) {
    throw IdxError(e.kind(), std::string(e.what()) + " (" + images.string() + ", " + labels.string() + ")");
  }
}

std::vector<std::uint8_t> encode_idx_images(std::span<const RawDigit> digits) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + digits.size() * kPixels);
  put_be32(out, kImagesMagic);
  put_be32(out, static_cast<std::uint32_t>(digits.size()));
  put_be32(out, kSide);
  put_be32(out, kSide);
  for (const RawDigit& d : digits) {
    for (float p : d.pixels) out.push_back(static_cast<std::uint8_t>(std::lround(p * 255.0f)));
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const RawDigit> digits) {
  std::vector<std::uint8_t> out;
  put_be32(out, kLabelsMagic);
  put_be32(out, static_cast<std::uint32_t>(digits.size()));
  for (const RawDigit& d : digits) out.push_back(static_cast<std::uint8_t>(d.digit));
  return out;
}

}  // namespace dair::data
