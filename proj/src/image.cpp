#include "roilink/image.hpp"

#include <algorithm>
#include <cstring>

#include "roilink/error.hpp"

namespace roilink {

GrayImage to_gray(const RgbImage& image) {
  GrayImage out(image.dims);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const std::uint8_t* p = &image.pixels[i * 3];
    out.pixels[i] = luma(p[0], p[1], p[2]);
  }
  return out;
}

FrameDims downscaled_dims(const FrameDims& dims, int factor) {
  if (factor < 1) throw ConfigError("downscale factor must be >= 1");
  return {(dims.width + factor - 1) / factor, (dims.height + factor - 1) / factor};
}

GrayImage downscale(const GrayImage& image, int factor) {
  const FrameDims small = downscaled_dims(image.dims, factor);
  GrayImage out(small);
  for (int by = 0; by < small.height; ++by) {
    const int y0 = by * factor;
    const int y1 = std::min(y0 + factor, image.dims.height);
    for (int bx = 0; bx < small.width; ++bx) {
      const int x0 = bx * factor;
      const int x1 = std::min(x0 + factor, image.dims.width);
      std::uint32_t sum = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) sum += image.at(x, y);
      }
      const std::uint32_t n = static_cast<std::uint32_t>((x1 - x0) * (y1 - y0));
      out.at(bx, by) = static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
    }
  }
  return out;
}

RgbImage upscale_to_rgb(const GrayImage& base, int factor, const FrameDims& target) {
  if (downscaled_dims(target, factor) != base.dims) {
    throw GeometryError("base layer dims do not match the target frame");
  }
  RgbImage out(target);
  for (int y = 0; y < target.height; ++y) {
    for (int x = 0; x < target.width; ++x) {
      const std::uint8_t v = base.at(x / factor, y / factor);
      std::uint8_t* p = &out.pixels[out.offset(x, y)];
      p[0] = p[1] = p[2] = v;
    }
  }
  return out;
}

std::vector<std::uint8_t> crop(const RgbImage& image, const RectPx& rect) {
  if (!image.dims.contains(rect)) throw GeometryError("crop rect outside image");
  std::vector<std::uint8_t> out(static_cast<std::size_t>(rect.area()) * 3);
  const std::size_t row = static_cast<std::size_t>(rect.w) * 3;
  for (int y = 0; y < rect.h; ++y) {
    std::memcpy(out.data() + y * row, &image.pixels[image.offset(rect.x, rect.y + y)], row);
  }
  return out;
}

void paste(RgbImage& image, const RectPx& rect, std::span<const std::uint8_t> bytes) {
  if (!image.dims.contains(rect)) throw GeometryError("paste rect outside image");
  if (bytes.size() != static_cast<std::size_t>(rect.area()) * 3) {
    throw GeometryError("paste byte count does not match rect");
  }
  const std::size_t row = static_cast<std::size_t>(rect.w) * 3;
  for (int y = 0; y < rect.h; ++y) {
    std::memcpy(&image.pixels[image.offset(rect.x, rect.y + y)], bytes.data() + y * row, row);
  }
}

}  // namespace roilink
