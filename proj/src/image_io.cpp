#include "roilink/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <png.h>

#include "roilink/error.hpp"

namespace roilink {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

namespace {

// Netpbm-style header reader: whitespace-separated tokens, '#' comments.
class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) throw ParseError("truncated raster header");
    return out;
  }

  long long integer() {
    const std::string t = token();
    try {
      std::size_t used = 0;
      const long long v = std::stoll(t, &used);
      if (used != t.size()) throw ParseError("bad integer in raster header: " + t);
      return v;
    } catch (const std::logic_error&) {
      throw ParseError("bad integer in raster header: " + t);
    }
  }

  double real() {
    const std::string t = token();
    try {
      return std::stod(t);
    } catch (const std::logic_error&) {
      throw ParseError("bad number in raster header: " + t);
    }
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t data_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ParseError("truncated raster header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

FrameDims read_dims(HeaderReader& h) {
  const long long w = h.integer();
  const long long ht = h.integer();
  if (w < 1 || ht < 1 || w > (1 << 20) || ht > (1 << 20)) {
    throw ParseError("raster dims out of range");
  }
  return {static_cast<int>(w), static_cast<int>(ht)};
}

}  // namespace

Heatmap parse_pfm(std::span<const std::uint8_t> bytes) {
  HeaderReader h(bytes);
  const std::string magic = h.token();
  if (magic != "Pf") throw ParseError("not a grayscale PFM (magic " + magic + ")");
  const FrameDims dims = read_dims(h);
  const double scale = h.real();
  if (scale == 0.0 || !std::isfinite(scale)) throw ParseError("bad PFM scale");
  const bool little = scale < 0;
  const std::size_t start = h.data_start();
  const std::size_t count = static_cast<std::size_t>(dims.area());
  if (bytes.size() - start < count * 4) throw ParseError("truncated PFM raster");

  std::vector<float> values(count);
  for (int row = 0; row < dims.height; ++row) {
    // PFM stores the bottom row first.
    const int y = dims.height - 1 - row;
    for (int x = 0; x < dims.width; ++x) {
      std::uint8_t b[4];
      std::memcpy(b, bytes.data() + start + (static_cast<std::size_t>(row) * dims.width + x) * 4, 4);
      if (little != (std::endian::native == std::endian::little)) {
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
      }
      float v;
      std::memcpy(&v, b, 4);
      if (std::isnan(v)) v = 0.0f;
      values[static_cast<std::size_t>(y) * dims.width + x] = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return Heatmap(dims, std::move(values));
}

std::vector<std::uint8_t> format_pfm(const Heatmap& heatmap) {
  const FrameDims d = heatmap.dims();
  const std::string header =
      "Pf\n" + std::to_string(d.width) + " " + std::to_string(d.height) + "\n-1.0\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(d.area()) * 4);
  for (int y = d.height - 1; y >= 0; --y) {
    for (int x = 0; x < d.width; ++x) {
      std::uint8_t b[4];
      const float v = heatmap.at(x, y);
      std::memcpy(b, &v, 4);
      if constexpr (std::endian::native == std::endian::big) {
        std::swap(b[0], b[3]);
        std::swap(b[1], b[2]);
      }
      out.insert(out.end(), b, b + 4);
    }
  }
  return out;
}

Heatmap read_pfm(const std::filesystem::path& path) {
  try {
    return parse_pfm(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.what(), path.string());
  }
}

void write_pfm(const Heatmap& heatmap, const std::filesystem::path& path) {
  write_file(path, format_pfm(heatmap));
}

BinaryMap parse_pgm(std::span<const std::uint8_t> bytes) {
  HeaderReader h(bytes);
  const std::string magic = h.token();
  if (magic != "P5") throw ParseError("not a binary PGM (magic " + magic + ")");
  const FrameDims dims = read_dims(h);
  const long long maxval = h.integer();
  if (maxval != 1 && maxval != 255) {
    throw ParseError("PGM maxval must be 1 or 255, got " + std::to_string(maxval));
  }
  const std::size_t start = h.data_start();
  const std::size_t count = static_cast<std::size_t>(dims.area());
  if (bytes.size() - start < count) throw ParseError("truncated PGM raster");
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t v = bytes[start + i];
    bits[i] = maxval == 1 ? (v >= 1 ? 1 : 0) : (v >= 128 ? 1 : 0);
  }
  return BinaryMap(dims, std::move(bits));
}

BinaryMap read_pgm(const std::filesystem::path& path) {
  try {
    return parse_pgm(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.what(), path.string());
  }
}

void write_pgm(const BinaryMap& map, const std::filesystem::path& path) {
  const FrameDims d = map.dims();
  const std::string header =
      "P5\n" + std::to_string(d.width) + " " + std::to_string(d.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (std::uint8_t b : map.bits()) out.push_back(b ? 255 : 0);
  write_file(path, out);
}

std::vector<std::uint8_t> encode_png(const FrameDims& dims,
                                     std::span<const std::uint8_t> rgb) {
  if (rgb.size() != static_cast<std::size_t>(dims.area()) * 3) {
    throw GeometryError("PNG encode: byte count does not match dims");
  }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(dims.width);
  img.height = static_cast<png_uint_32>(dims.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  return encode_png(image.dims, image.pixels);
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw ParseError(std::string("PNG decode failed: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  if (img.width < 1 || img.height < 1 || img.width > (1u << 20) || img.height > (1u << 20)) {
    png_image_free(&img);
    throw ParseError("PNG dims out of range");
  }
  RgbImage out(FrameDims{static_cast<int>(img.width), static_cast<int>(img.height)});
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    throw ParseError(std::string("PNG decode failed: ") + img.message);
  }
  return out;
}

RgbImage read_png(const std::filesystem::path& path) { return decode_png(read_file(path)); }

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  write_file(path, encode_png(image));
}

}  // namespace roilink
