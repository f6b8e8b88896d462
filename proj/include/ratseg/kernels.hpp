#pragma once

// Data-parallel inner loops shared by the raster, background and geometry
// modules. Each kernel exists twice: a plain serial reference kept for tests
// and benchmarking, and an OpenMP version used by the library.

#include <cstddef>
#include <cstdint>
#include <span>

namespace ratseg::kernels {

namespace serial {

/// out[i] = most frequent value of frames[k][i] over k; ties go to the
/// smallest value.
void temporal_mode(std::span<const std::uint8_t* const> frames, std::size_t count,
                   std::uint8_t* out);

/// out[p] = sum over 3 channels of |a - b| for interleaved RGB buffers.
void abs_diff_sum3(const std::uint8_t* a, const std::uint8_t* b, std::size_t pixels,
                   std::int32_t* out);

/// Exact squared Euclidean distance from each set pixel to the nearest unset
/// pixel; the image is surrounded by an unset ring. Unset pixels get 0.
void squared_edt(const std::uint8_t* mask, int width, int height, std::int64_t* out);

void dilate_disc(const std::uint8_t* in, int width, int height, int radius,
                 std::uint8_t* out);
void erode_disc(const std::uint8_t* in, int width, int height, int radius,
                std::uint8_t* out);

}  // namespace serial

namespace omp {

void temporal_mode(std::span<const std::uint8_t* const> frames, std::size_t count,
                   std::uint8_t* out);
void abs_diff_sum3(const std::uint8_t* a, const std::uint8_t* b, std::size_t pixels,
                   std::int32_t* out);
void squared_edt(const std::uint8_t* mask, int width, int height, std::int64_t* out);
void dilate_disc(const std::uint8_t* in, int width, int height, int radius,
                 std::uint8_t* out);
void erode_disc(const std::uint8_t* in, int width, int height, int radius,
                std::uint8_t* out);

}  // namespace omp

}  // namespace ratseg::kernels
