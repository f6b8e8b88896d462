#pragma once

// Per-line building blocks used by both the serial and the OpenMP kernels.

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

namespace ratseg::kernels::detail {

/// Mode of column `i` across frames; `hist` must be all-zero on entry and is
/// restored to all-zero on exit.
inline std::uint8_t mode_at(std::span<const std::uint8_t* const> frames, std::size_t i,
                            std::uint32_t* hist) {
    std::uint32_t best_count = 0;
    std::uint8_t best = 0;
    for (const std::uint8_t* f : frames) {
        const std::uint8_t v = f[i];
        const std::uint32_t c = ++hist[v];
        if (c > best_count || (c == best_count && v < best)) {
            best_count = c;
            best = v;
        }
    }
    for (const std::uint8_t* f : frames) hist[f[i]] = 0;
    return best;
}

/// Distance (in rows) to the nearest unset pixel in column x, with virtual
/// unset rows at -1 and height.
inline void column_distance(const std::uint8_t* mask, int width, int height, int x,
                            std::int64_t* g) {
    std::int64_t d = 0;
    for (int y = 0; y < height; ++y) {
        d = mask[static_cast<std::size_t>(y) * width + x] ? d + 1 : 0;
        g[static_cast<std::size_t>(y) * width + x] = d;
    }
    d = 0;
    for (int y = height - 1; y >= 0; --y) {
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        d = mask[i] ? d + 1 : 0;
        g[i] = std::min(g[i], d);
    }
}

/// Lower envelope of parabolas (Felzenszwalb-Huttenlocher) along one row.
/// `f` holds squared column distances for sites 0..n-1; two extra sites with
/// value 0 sit at -1 and n. Scratch buffers must hold n + 2 entries (+1 for z).
inline void row_envelope(const std::int64_t* f, int n, std::int64_t* out,
                         std::vector<int>& v, std::vector<double>& z,
                         std::vector<std::int64_t>& fs) {
    const int m = n + 2;
    // site s in [0, m) has position s - 1
    fs[0] = 0;
    for (int s = 0; s < n; ++s) fs[s + 1] = f[s];
    fs[m - 1] = 0;

    auto pos = [](int s) { return static_cast<std::int64_t>(s) - 1; };
    int k = 0;
    v[0] = 0;
    z[0] = -1e300;
    z[1] = 1e300;
    for (int q = 1; q < m; ++q) {
        const std::int64_t pq = pos(q);
        double s = 0.0;
        // z[0] is -inf, so k never drops below zero
        while (true) {
            const std::int64_t pv = pos(v[k]);
            s = static_cast<double>((fs[q] + pq * pq) - (fs[v[k]] + pv * pv)) /
                static_cast<double>(2 * (pq - pv));
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = 1e300;
    }
    k = 0;
    for (int x = 0; x < n; ++x) {
        while (z[k + 1] < static_cast<double>(x)) ++k;
        const std::int64_t d = x - pos(v[k]);
        out[x] = d * d + fs[v[k]];
    }
}

/// Horizontal half-width of a Euclidean disc at each vertical offset.
inline std::vector<int> disc_half_widths(int radius) {
    std::vector<int> hw(static_cast<std::size_t>(2 * radius + 1), 0);
    for (int dy = -radius; dy <= radius; ++dy) {
        int w = 0;
        while ((w + 1) * (w + 1) + dy * dy <= radius * radius) ++w;
        hw[static_cast<std::size_t>(dy + radius)] = w;
    }
    return hw;
}

/// prefix[y * (width + 1) + x] = number of set pixels in row y before column x.
inline void row_prefix(const std::uint8_t* in, int width, int y, std::int32_t* prefix) {
    std::int32_t* p = prefix + static_cast<std::size_t>(y) * (width + 1);
    p[0] = 0;
    const std::uint8_t* row = in + static_cast<std::size_t>(y) * width;
    for (int x = 0; x < width; ++x) p[x + 1] = p[x] + (row[x] ? 1 : 0);
}

inline void dilate_row(const std::int32_t* prefix, int width, int height, int radius,
                       const std::vector<int>& hw, int y, std::uint8_t* out) {
    std::uint8_t* o = out + static_cast<std::size_t>(y) * width;
    std::fill(o, o + width, std::uint8_t{0});
    // Only rows with set pixels can hit, and only near their column span.
    std::vector<int> rows;
    int lo = width, hi = -1;
    for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= height) continue;
        const std::int32_t* p = prefix + static_cast<std::size_t>(yy) * (width + 1);
        if (p[width] == 0) continue;
        rows.push_back(dy);
        lo = std::min(lo, static_cast<int>(std::upper_bound(p, p + width + 1, 0) - p) - 1);
        hi = std::max(hi, static_cast<int>(std::lower_bound(p, p + width + 1, p[width]) - p) - 1);
    }
    if (rows.empty()) return;
    const int xa = std::max(0, lo - radius);
    const int xb = std::min(width - 1, hi + radius);
    for (int x = xa; x <= xb; ++x) {
        for (int dy : rows) {
            const int h = hw[static_cast<std::size_t>(dy + radius)];
            const int x0 = std::max(0, x - h);
            const int x1 = std::min(width - 1, x + h);
            const std::int32_t* p = prefix + static_cast<std::size_t>(y + dy) * (width + 1);
            if (p[x1 + 1] - p[x0] > 0) {
                o[x] = 1;
                break;
            }
        }
    }
}

inline void erode_row(const std::int32_t* prefix, int width, int height, int radius,
                      const std::vector<int>& hw, int y, std::uint8_t* out) {
    for (int x = 0; x < width; ++x) {
        std::uint8_t keep = 1;
        for (int dy = -radius; dy <= radius && keep; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= height) continue;
            const int h = hw[static_cast<std::size_t>(dy + radius)];
            const int x0 = std::max(0, x - h);
            const int x1 = std::min(width - 1, x + h);
            const std::int32_t* p = prefix + static_cast<std::size_t>(yy) * (width + 1);
            if (p[x1 + 1] - p[x0] != x1 - x0 + 1) keep = 0;
        }
        out[static_cast<std::size_t>(y) * width + x] = keep;
    }
}

}  // namespace ratseg::kernels::detail
