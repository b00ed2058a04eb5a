#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "roilink/geometry.hpp"

namespace roilink {

/// 8-bit single-channel image, row-major.
struct GrayImage {
  FrameDims dims;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  explicit GrayImage(FrameDims d, std::uint8_t fill = 0)
      : dims(d), pixels(static_cast<std::size_t>(d.area()), fill) {}

  std::uint8_t at(int x, int y) const noexcept {
    return pixels[static_cast<std::size_t>(y) * dims.width + x];
  }
  std::uint8_t& at(int x, int y) noexcept {
    return pixels[static_cast<std::size_t>(y) * dims.width + x];
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// 8-bit interleaved RGB image, row-major.
struct RgbImage {
  FrameDims dims;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  explicit RgbImage(FrameDims d, std::uint8_t fill = 0)
      : dims(d), pixels(static_cast<std::size_t>(d.area()) * 3, fill) {}

  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * dims.width + x) * 3;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// BT.601 integer luma, rounded half up.
constexpr std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

GrayImage to_gray(const RgbImage& image);

/// ceil(W / factor) x ceil(H / factor).
FrameDims downscaled_dims(const FrameDims& dims, int factor);

/// Block mean over each factor x factor cell (cells clipped at the right and
/// bottom edges), rounded half up.
GrayImage downscale(const GrayImage& image, int factor);

/// Nearest-neighbour upscale of a grayscale base layer to `target`,
/// replicated into three channels.
RgbImage upscale_to_rgb(const GrayImage& base, int factor, const FrameDims& target);

/// Raw interleaved bytes of `rect`; throws GeometryError if out of bounds.
std::vector<std::uint8_t> crop(const RgbImage& image, const RectPx& rect);

/// Writes interleaved bytes of `rect` into `image`.
void paste(RgbImage& image, const RectPx& rect, std::span<const std::uint8_t> bytes);

}  // namespace roilink
