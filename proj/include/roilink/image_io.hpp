#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "roilink/image.hpp"
#include "roilink/saliency.hpp"

namespace roilink {

// Portable float map, grayscale ("Pf"). Either byte order is read (negative
// scale means little-endian); rows are stored bottom-to-top. Values are
// clamped to [0,1] on load, NaN reads as 0. Written little-endian.
Heatmap parse_pfm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> format_pfm(const Heatmap& heatmap);
Heatmap read_pfm(const std::filesystem::path& path);
void write_pfm(const Heatmap& heatmap, const std::filesystem::path& path);

// Binary PGM ("P5") with maxval 1 or 255. With maxval 255 any value >= 128
// reads as 1.
BinaryMap parse_pgm(std::span<const std::uint8_t> bytes);
BinaryMap read_pgm(const std::filesystem::path& path);
void write_pgm(const BinaryMap& map, const std::filesystem::path& path);

// PNG through libpng. Decoding converts any colour type to 8-bit RGB.
std::vector<std::uint8_t> encode_png(const RgbImage& image);
std::vector<std::uint8_t> encode_png(const FrameDims& dims,
                                     std::span<const std::uint8_t> rgb);
RgbImage decode_png(std::span<const std::uint8_t> bytes);
RgbImage read_png(const std::filesystem::path& path);
void write_png(const RgbImage& image, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace roilink
