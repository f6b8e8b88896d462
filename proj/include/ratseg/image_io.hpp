#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ratseg/raster.hpp"

namespace ratseg::io {

/// Reads 8-bit RGB, RGBA, gray or palette PNGs; alpha is dropped and gray is
/// replicated. Throws Error(Io) on failure.
ImageRgb read_png_rgb(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const ImageRgb& image);

/// 8-bit grayscale; values outside [0, 255] are clamped on write.
GrayImage read_png_gray(const std::filesystem::path& path);
void write_png_gray(const std::filesystem::path& path, const GrayImage& image);

/// Masks are stored as 0/255 grayscale.
BinaryMask read_png_mask(const std::filesystem::path& path);
void write_png_mask(const std::filesystem::path& path, const BinaryMask& mask);

/// Files in `dir` whose name matches the shell-style `pattern` (* and ?),
/// sorted lexicographically.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir,
                                               const std::string& pattern = "*.png");

bool glob_match(std::string_view pattern, std::string_view name);

}  // namespace ratseg::io
