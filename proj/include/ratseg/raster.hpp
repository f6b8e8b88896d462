#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ratseg/error.hpp"

namespace ratseg {

/// Integer pixel coordinate; x = column, y = row.
struct Pixel {
    int x = 0;
    int y = 0;
    bool operator==(const Pixel&) const = default;
};

/// Real-valued image coordinate. Pixel centers sit on integer coordinates.
struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

/// Dense row-major single-channel raster. The tag keeps masks, label maps and
/// elevation images from being mixed up even when they share a value type.
template <class T, class Tag>
class Raster {
public:
    using value_type = T;

    Raster() = default;
    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(checked(width, height)), fill) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

    bool same_shape(int w, int h) const noexcept { return w == width_ && h == height_; }
    template <class U, class G>
    bool same_shape(const Raster<U, G>& other) const noexcept {
        return other.width() == width_ && other.height() == height_;
    }

    bool operator==(const Raster&) const = default;

private:
    static long checked(int w, int h) {
        if (w < 0 || h < 0) throw Error(ErrorCode::InvalidArgument, "negative raster size");
        return static_cast<long>(w) * h;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

struct MaskTag {};
struct LabelTag {};
struct GrayTag {};

/// Values are 0 or 1.
using BinaryMask = Raster<std::uint8_t, MaskTag>;
/// 0 = unlabeled, regions 1..K.
using LabelMap = Raster<std::int32_t, LabelTag>;
/// Integer scalar image: foreground residuals (0..765) or watershed elevations.
using GrayImage = Raster<std::int32_t, GrayTag>;

/// Interleaved 8-bit RGB image.
class ImageRgb {
public:
    ImageRgb() = default;
    ImageRgb(int width, int height, std::uint8_t fill = 0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    std::uint8_t& at(int x, int y, int c) noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
    }
    std::uint8_t at(int x, int y, int c) const noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
    }

    std::span<std::uint8_t> data() noexcept { return data_; }
    std::span<const std::uint8_t> data() const noexcept { return data_; }

    bool same_shape(int w, int h) const noexcept { return w == width_ && h == height_; }
    template <class U, class G>
    bool same_shape(const Raster<U, G>& r) const noexcept {
        return r.width() == width_ && r.height() == height_;
    }
    bool same_shape(const ImageRgb& o) const noexcept { return same_shape(o.width_, o.height_); }

    bool operator==(const ImageRgb&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Axis-aligned box with top-left origin, COCO [x, y, w, h] convention.
/// A box derived from a mask spans whole pixels: w = max_x - min_x + 1.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
    double area() const noexcept { return w * h; }
    bool operator==(const BoundingBox&) const = default;
};

/// Closed polygon; the last point connects back to the first.
using Contour = std::vector<Point2>;

enum class Connectivity { Four = 4, Eight = 8 };

/// Window [x0, x0 + w) x [y0, y0 + h) of `r`; positions outside `r` get `fill`.
template <class T, class Tag>
Raster<T, Tag> crop(const Raster<T, Tag>& r, int x0, int y0, int w, int h, T fill = T{}) {
    Raster<T, Tag> out(w, h, fill);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (r.contains(x0 + x, y0 + y)) out(x, y) = r(x0 + x, y0 + y);
    return out;
}

/// Copies `src` into `dst` with its origin at (x0, y0), clipped to `dst`.
template <class T, class Tag>
void paste(Raster<T, Tag>& dst, const Raster<T, Tag>& src, int x0, int y0) {
    for (int y = 0; y < src.height(); ++y)
        for (int x = 0; x < src.width(); ++x)
            if (dst.contains(x0 + x, y0 + y)) dst(x0 + x, y0 + y) = src(x, y);
}

// --- basic mask queries -----------------------------------------------------

std::size_t area(const BinaryMask& mask);
/// Throws EmptyMask when no pixel is set.
BoundingBox bounding_box(const BinaryMask& mask);
/// Offsets (dx, dy) with dx^2 + dy^2 <= radius^2.
std::vector<Pixel> disc_offsets(int radius);

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_and_not(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_from_label(const LabelMap& labels, std::int32_t label);

// --- components and morphology ----------------------------------------------

/// Labels sorted by decreasing area; equal areas keep row-major order of each
/// region's first pixel, so label 1 is the largest and earliest region.
LabelMap connected_components(const BinaryMask& mask, Connectivity conn = Connectivity::Eight);
/// Number of regions in a labelling produced by connected_components.
int label_count(const LabelMap& labels);
/// Pixel count per label; index 0 holds the background count.
std::vector<std::size_t> label_areas(const LabelMap& labels);

/// Background regions not 4-connected to the border become foreground.
BinaryMask fill_holes(const BinaryMask& mask);

/// Disc dilation; pixels outside the image count as background.
BinaryMask dilate(const BinaryMask& mask, int radius);
/// Disc erosion; pixels outside the image are ignored (treated as set), which
/// makes erode the adjoint of dilate and the closing extensive.
BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask morphological_closing(const BinaryMask& mask, int radius);

BinaryMask remove_small_components(const BinaryMask& mask, std::size_t min_area,
                                   Connectivity conn = Connectivity::Eight);
/// Largest 8-connected component (empty mask if none).
BinaryMask largest_component(const BinaryMask& mask);

/// area(mask) / number of pixel centers inside the convex hull of the set
/// pixel centers. The hull pixel count is exact (Pick's theorem on the
/// shoelace area), so rasterized convex shapes score exactly 1.
double solidity(const BinaryMask& mask);

/// Convex hull of lattice points (monotone chain, collinear points dropped).
/// Positive orientation in (x, y) coordinates.
std::vector<Pixel> convex_hull(std::vector<Pixel> points);

// --- contours ---------------------------------------------------------------

/// Moore-neighbour trace of the outer boundary starting at the first set pixel
/// in row-major order. Points are pixel centers in traversal order; the signed
/// shoelace area in (x, y) image coordinates is positive (counterclockwise in
/// a y-up frame).
Contour trace_boundary(const BinaryMask& mask);

/// Even-odd scanline fill: a pixel is set iff its center lies inside the
/// polygon (left edges inclusive, right edges exclusive).
BinaryMask rasterize_polygon(const Contour& contour, int width, int height);

/// Signed shoelace area.
double polygon_area(const Contour& contour);
double polygon_perimeter(const Contour& contour);

}  // namespace ratseg
