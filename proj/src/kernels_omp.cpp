#include "ratseg/kernels.hpp"

#include <array>
#include <vector>

#include "kernels_detail.hpp"

namespace ratseg::kernels::omp {

void temporal_mode(std::span<const std::uint8_t* const> frames, std::size_t count,
                   std::uint8_t* out) {
    const long n = static_cast<long>(count);
#pragma omp parallel
    {
        std::array<std::uint32_t, 256> hist{};
#pragma omp for schedule(static)
        for (long i = 0; i < n; ++i)
            out[i] = detail::mode_at(frames, static_cast<std::size_t>(i), hist.data());
    }
}

void abs_diff_sum3(const std::uint8_t* a, const std::uint8_t* b, std::size_t pixels,
                   std::int32_t* out) {
    const long n = static_cast<long>(pixels);
#pragma omp parallel for schedule(static)
    for (long p = 0; p < n; ++p) {
        std::int32_t s = 0;
        for (int c = 0; c < 3; ++c) {
            const int d = static_cast<int>(a[3 * p + c]) - static_cast<int>(b[3 * p + c]);
            s += d < 0 ? -d : d;
        }
        out[p] = s;
    }
}

void squared_edt(const std::uint8_t* mask, int width, int height, std::int64_t* out) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    std::vector<std::int64_t> g(n);
#pragma omp parallel
    {
#pragma omp for schedule(static)
        for (int x = 0; x < width; ++x) {
            detail::column_distance(mask, width, height, x, g.data());
            for (int y = 0; y < height; ++y) {
                auto& v = g[static_cast<std::size_t>(y) * width + x];
                v *= v;
            }
        }

        std::vector<int> v(static_cast<std::size_t>(width) + 2);
        std::vector<double> z(static_cast<std::size_t>(width) + 3);
        std::vector<std::int64_t> fs(static_cast<std::size_t>(width) + 2);
#pragma omp for schedule(static)
        for (int y = 0; y < height; ++y) {
            const std::size_t row = static_cast<std::size_t>(y) * width;
            detail::row_envelope(g.data() + row, width, out + row, v, z, fs);
            for (int x = 0; x < width; ++x)
                if (!mask[row + x]) out[row + x] = 0;
        }
    }
}

void dilate_disc(const std::uint8_t* in, int width, int height, int radius, std::uint8_t* out) {
    std::vector<std::int32_t> prefix(static_cast<std::size_t>(width + 1) * height);
    const auto hw = detail::disc_half_widths(radius);
#pragma omp parallel
    {
#pragma omp for schedule(static)
        for (int y = 0; y < height; ++y) detail::row_prefix(in, width, y, prefix.data());
#pragma omp for schedule(static)
        for (int y = 0; y < height; ++y)
            detail::dilate_row(prefix.data(), width, height, radius, hw, y, out);
    }
}

void erode_disc(const std::uint8_t* in, int width, int height, int radius, std::uint8_t* out) {
    std::vector<std::int32_t> prefix(static_cast<std::size_t>(width + 1) * height);
    const auto hw = detail::disc_half_widths(radius);
#pragma omp parallel
    {
#pragma omp for schedule(static)
        for (int y = 0; y < height; ++y) detail::row_prefix(in, width, y, prefix.data());
#pragma omp for schedule(static)
        for (int y = 0; y < height; ++y)
            detail::erode_row(prefix.data(), width, height, radius, hw, y, out);
    }
}

}  // namespace ratseg::kernels::omp
