#include "ratseg/raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "ratseg/kernels.hpp"

namespace ratseg {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::MultipleComponents: return "MultipleComponents";
        case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
        case ErrorCode::EmptySequence: return "EmptySequence";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::TooFewEndpoints: return "TooFewEndpoints";
        case ErrorCode::DisconnectedEndpoints: return "DisconnectedEndpoints";
        case ErrorCode::NoMarkers: return "NoMarkers";
        case ErrorCode::MarkerOutsideDomain: return "MarkerOutsideDomain";
        case ErrorCode::ContourTooShort: return "ContourTooShort";
        case ErrorCode::PathTooShort: return "PathTooShort";
        case ErrorCode::KeypointOutsideMask: return "KeypointOutsideMask";
        case ErrorCode::SplineFitFailure: return "SplineFitFailure";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::TooFewInstances: return "TooFewInstances";
        case ErrorCode::PlacementFailure: return "PlacementFailure";
        case ErrorCode::NoVisibleKeypoints: return "NoVisibleKeypoints";
        case ErrorCode::NonPositiveArea: return "NonPositiveArea";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::UnknownImageId: return "UnknownImageId";
        case ErrorCode::PoseInvalid: return "PoseInvalid";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

ImageRgb::ImageRgb(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "image must be at least 1x1");
    data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

namespace {

constexpr std::array<Pixel, 8> kEight = {{{1, 0}, {1, 1}, {0, 1}, {-1, 1},
                                          {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};
constexpr std::array<Pixel, 4> kFour = {{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};

template <class F>
void for_neighbors(Connectivity conn, F&& f) {
    if (conn == Connectivity::Four) {
        for (const auto& d : kFour) f(d);
    } else {
        for (const auto& d : kEight) f(d);
    }
}

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw Error(ErrorCode::DimensionMismatch, "mask sizes differ");
}

}  // namespace

std::size_t area(const BinaryMask& mask) {
    return static_cast<std::size_t>(
        std::count_if(mask.data().begin(), mask.data().end(), [](auto v) { return v != 0; }));
}

BoundingBox bounding_box(const BinaryMask& mask) {
    int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) throw Error(ErrorCode::EmptyMask, "bounding box of an empty mask");
    return {double(x0), double(y0), double(x1 - x0 + 1), double(y1 - y0 + 1)};
}

std::vector<Pixel> disc_offsets(int radius) {
    std::vector<Pixel> out;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) out.push_back({dx, dy});
    return out;
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
    return out;
}

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] || b[i]) ? 1 : 0;
    return out;
}

BinaryMask mask_and_not(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b);
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && !b[i]) ? 1 : 0;
    return out;
}

BinaryMask mask_from_label(const LabelMap& labels, std::int32_t label) {
    BinaryMask out(labels.width(), labels.height());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == label ? 1 : 0;
    return out;
}

LabelMap connected_components(const BinaryMask& mask, Connectivity conn) {
    const int w = mask.width(), h = mask.height();
    LabelMap provisional(w, h, 0);
    std::vector<std::size_t> areas{0};
    std::vector<Pixel> stack;
    std::int32_t next = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y) || provisional(x, y)) continue;
            ++next;
            std::size_t count = 0;
            provisional(x, y) = next;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                ++count;
                for_neighbors(conn, [&](Pixel d) {
                    const int nx = p.x + d.x, ny = p.y + d.y;
                    if (mask.contains(nx, ny) && mask(nx, ny) && !provisional(nx, ny)) {
                        provisional(nx, ny) = next;
                        stack.push_back({nx, ny});
                    }
                });
            }
            areas.push_back(count);
        }
    }
    // Discovery order is row-major order of each region's first pixel, so a
    // stable sort by area gives the documented tie-break.
    std::vector<std::int32_t> order(static_cast<std::size_t>(next));
    std::iota(order.begin(), order.end(), 1);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::int32_t a, std::int32_t b) { return areas[a] > areas[b]; });
    std::vector<std::int32_t> remap(static_cast<std::size_t>(next) + 1, 0);
    for (std::size_t i = 0; i < order.size(); ++i)
        remap[static_cast<std::size_t>(order[i])] = static_cast<std::int32_t>(i + 1);
    for (auto& v : provisional.data()) v = remap[static_cast<std::size_t>(v)];
    return provisional;
}

int label_count(const LabelMap& labels) {
    std::int32_t m = 0;
    for (auto v : labels.data()) m = std::max(m, v);
    return m;
}

std::vector<std::size_t> label_areas(const LabelMap& labels) {
    std::vector<std::size_t> out(static_cast<std::size_t>(label_count(labels)) + 1, 0);
    for (auto v : labels.data()) ++out[static_cast<std::size_t>(v)];
    return out;
}

BinaryMask fill_holes(const BinaryMask& mask) {
    const int w = mask.width(), h = mask.height();
    BinaryMask outside(w, h, 0);
    std::vector<Pixel> stack;
    auto seed = [&](int x, int y) {
        if (!mask(x, y) && !outside(x, y)) {
            outside(x, y) = 1;
            stack.push_back({x, y});
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        for (const auto& d : kFour) {
            const int nx = p.x + d.x, ny = p.y + d.y;
            if (mask.contains(nx, ny)) seed(nx, ny);
        }
    }
    BinaryMask out(w, h);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = outside[i] ? 0 : 1;
    return out;
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
    if (radius < 0) throw Error(ErrorCode::InvalidArgument, "negative radius");
    if (radius == 0 || mask.empty()) return mask;
    BinaryMask out(mask.width(), mask.height());
    kernels::omp::dilate_disc(mask.data().data(), mask.width(), mask.height(), radius,
                              out.data().data());
    return out;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
    if (radius < 0) throw Error(ErrorCode::InvalidArgument, "negative radius");
    if (radius == 0 || mask.empty()) return mask;
    BinaryMask out(mask.width(), mask.height());
    kernels::omp::erode_disc(mask.data().data(), mask.width(), mask.height(), radius,
                             out.data().data());
    return out;
}

BinaryMask morphological_closing(const BinaryMask& mask, int radius) {
    return erode(dilate(mask, radius), radius);
}

BinaryMask remove_small_components(const BinaryMask& mask, std::size_t min_area,
                                   Connectivity conn) {
    if (min_area == 0) return mask;
    const LabelMap labels = connected_components(mask, conn);
    const auto areas = label_areas(labels);
    BinaryMask out(mask.width(), mask.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto l = static_cast<std::size_t>(labels[i]);
        out[i] = (l != 0 && areas[l] >= min_area) ? 1 : 0;
    }
    return out;
}

BinaryMask largest_component(const BinaryMask& mask) {
    return mask_from_label(connected_components(mask, Connectivity::Eight), 1);
}

std::vector<Pixel> convex_hull(std::vector<Pixel> pts) {
    std::sort(pts.begin(), pts.end(),
              [](Pixel a, Pixel b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    auto cross = [](Pixel o, Pixel a, Pixel b) {
        return static_cast<long long>(a.x - o.x) * (b.y - o.y) -
               static_cast<long long>(a.y - o.y) * (b.x - o.x);
    };
    std::vector<Pixel> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

double solidity(const BinaryMask& mask) {
    std::vector<Pixel> candidates;
    std::size_t count = 0;
    for (int y = 0; y < mask.height(); ++y) {
        int first = -1, last = -1;
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) {
                if (first < 0) first = x;
                last = x;
                ++count;
            }
        if (first >= 0) {
            candidates.push_back({first, y});
            candidates.push_back({last, y});
        }
    }
    if (count == 0) throw Error(ErrorCode::EmptyMask, "solidity of an empty mask");
    const auto hull = convex_hull(std::move(candidates));
    // Pick: lattice points in hull = A + B/2 + 1, with 2A the shoelace sum and
    // B the boundary lattice count. Also exact for 1- and 2-vertex hulls.
    long long twice_area = 0, boundary = 0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Pixel a = hull[i], b = hull[(i + 1) % hull.size()];
        twice_area += static_cast<long long>(a.x) * b.y - static_cast<long long>(b.x) * a.y;
        boundary += std::gcd(std::abs(b.x - a.x), std::abs(b.y - a.y));
    }
    const long long hull_pixels = (std::llabs(twice_area) + boundary) / 2 + 1;
    return static_cast<double>(count) / static_cast<double>(hull_pixels);
}

Contour trace_boundary(const BinaryMask& mask) {
    const LabelMap labels = connected_components(mask, Connectivity::Eight);
    const int n = label_count(labels);
    if (n == 0) throw Error(ErrorCode::EmptyMask, "nothing to trace");
    if (n > 1) throw Error(ErrorCode::MultipleComponents, "trace_boundary needs one component");

    Pixel start{-1, -1};
    for (int y = 0; y < mask.height() && start.x < 0; ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) {
                start = {x, y};
                break;
            }

    auto is_set = [&](Pixel p) { return mask.contains(p.x, p.y) && mask(p.x, p.y) != 0; };
    auto dir_of = [](Pixel d) {
        for (int i = 0; i < 8; ++i)
            if (kEight[static_cast<std::size_t>(i)] == d) return i;
        return -1;
    };

    Contour out;
    out.push_back({double(start.x), double(start.y)});
    Pixel cur = start;
    int back = 4;  // west of the first pixel is background
    Pixel second{-1, -1};
    while (true) {
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (back + k) % 8;
            const Pixel n = {cur.x + kEight[static_cast<std::size_t>(d)].x,
                             cur.y + kEight[static_cast<std::size_t>(d)].y};
            if (is_set(n)) {
                found = d;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel
        const Pixel next = {cur.x + kEight[static_cast<std::size_t>(found)].x,
                            cur.y + kEight[static_cast<std::size_t>(found)].y};
        const int prev_dir = (found + 7) % 8;
        const Pixel bg = {cur.x + kEight[static_cast<std::size_t>(prev_dir)].x,
                          cur.y + kEight[static_cast<std::size_t>(prev_dir)].y};
        if (cur == start) {
            if (second.x < 0) {
                second = next;
            } else if (next == second) {
                break;
            }
        }
        back = dir_of({bg.x - next.x, bg.y - next.y});
        cur = next;
        if (!(cur == start)) out.push_back({double(cur.x), double(cur.y)});
        if (out.size() > 4 * mask.size() + 8) break;  // cannot happen on a valid trace
    }
    return out;
}

double polygon_area(const Contour& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Point2& a = c[i];
        const Point2& b = c[(i + 1) % c.size()];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * s;
}

double polygon_perimeter(const Contour& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Point2& a = c[i];
        const Point2& b = c[(i + 1) % c.size()];
        s += std::hypot(b.x - a.x, b.y - a.y);
    }
    return s;
}

BinaryMask rasterize_polygon(const Contour& contour, int width, int height) {
    if (contour.size() < 3)
        throw Error(ErrorCode::DegeneratePolygon, "polygon needs at least 3 points");
    if (std::abs(polygon_area(contour)) < 1.0)
        throw Error(ErrorCode::DegeneratePolygon, "polygon area below one pixel");
    BinaryMask out(width, height, 0);
    double ymin = contour[0].y, ymax = contour[0].y;
    for (const auto& p : contour) {
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const int y0 = std::max(0, static_cast<int>(std::ceil(ymin)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(ymax)));
    std::vector<double> xs;
    for (int y = y0; y <= y1; ++y) {
        xs.clear();
        const double yc = y;
        for (std::size_t i = 0; i < contour.size(); ++i) {
            const Point2& a = contour[i];
            const Point2& b = contour[(i + 1) % contour.size()];
            const bool crosses = (a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y);
            if (!crosses) continue;
            xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const int xa = std::max(0, static_cast<int>(std::ceil(xs[i])));
            const int xb = std::min(width, static_cast<int>(std::ceil(xs[i + 1])));
            for (int x = xa; x < xb; ++x) out(x, y) = 1;
        }
    }
    return out;
}

}  // namespace ratseg
