#include "ratseg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "ratseg/geometry.hpp"

namespace ratseg {

namespace {

constexpr int kPlacementAttempts = 100;
constexpr int kCutDilation = 2;
constexpr int kCornerMargin = 2;
// Resampling window pad around the forward-mapped mask; wider than the
// default seam bands.
constexpr int kWindowPad = 16;

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Edge-clamped bilinear sample of one channel.
double bilinear(const ImageRgb& img, double x, double y, int c) {
    const int w = img.width();
    const int h = img.height();
    const double fx0 = std::floor(x);
    const double fy0 = std::floor(y);
    const double fx = x - fx0;
    const double fy = y - fy0;
    auto at = [&](double xi, double yi) {
        const int xx = static_cast<int>(std::clamp(xi, 0.0, static_cast<double>(w - 1)));
        const int yy = static_cast<int>(std::clamp(yi, 0.0, static_cast<double>(h - 1)));
        return static_cast<double>(img.at(xx, yy, c));
    };
    const double top = (1.0 - fx) * at(fx0, fy0) + fx * at(fx0 + 1.0, fy0);
    const double bot = (1.0 - fx) * at(fx0, fy0 + 1.0) + fx * at(fx0 + 1.0, fy0 + 1.0);
    return (1.0 - fy) * top + fy * bot;
}

// Nearest sample position, or false when it falls outside the raster.
bool nearest(int w, int h, double x, double y, int& xi, int& yi) {
    const double rx = std::floor(x + 0.5);
    const double ry = std::floor(y + 0.5);
    if (rx < 0.0 || ry < 0.0 || rx >= w || ry >= h) return false;
    xi = static_cast<int>(rx);
    yi = static_cast<int>(ry);
    return true;
}

// Resamples output pixels p inside the padded bounding box of the
// forward-mapped mask from `back(p)`; the image elsewhere is copied.
template <class Forward, class Back>
Segment resample(const Segment& seg, Forward fwd, Back back) {
    const int w = seg.image.width();
    const int h = seg.image.height();
    Segment out;
    out.image = seg.image;
    out.mask = BinaryMask(w, h, 0);
    out.parts = LabelMap(w, h, 0);
    const bool has_parts = seg.parts.same_shape(w, h);
    double fx0 = 1e300, fy0 = 1e300, fx1 = -1e300, fy1 = -1e300;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (seg.mask(x, y)) {
                const Point2 q = fwd(Point2{static_cast<double>(x), static_cast<double>(y)});
                fx0 = std::min(fx0, q.x);
                fy0 = std::min(fy0, q.y);
                fx1 = std::max(fx1, q.x);
                fy1 = std::max(fy1, q.y);
            }
    if (fx0 > fx1) {
        if (!has_parts) out.parts = LabelMap();
        return out;
    }
    const int x0 = static_cast<int>(std::clamp(std::floor(fx0) - kWindowPad, 0.0, static_cast<double>(w)));
    const int y0 = static_cast<int>(std::clamp(std::floor(fy0) - kWindowPad, 0.0, static_cast<double>(h)));
    const int x1 = static_cast<int>(std::clamp(std::ceil(fx1) + kWindowPad + 1, 0.0, static_cast<double>(w)));
    const int y1 = static_cast<int>(std::clamp(std::ceil(fy1) + kWindowPad + 1, 0.0, static_cast<double>(h)));
#pragma omp parallel for schedule(static)
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const Point2 q = back(Point2{static_cast<double>(x), static_cast<double>(y)});
            for (int c = 0; c < 3; ++c) out.image.at(x, y, c) = to_byte(bilinear(seg.image, q.x, q.y, c));
            int xi = 0;
            int yi = 0;
            if (nearest(w, h, q.x, q.y, xi, yi) && seg.mask(xi, yi)) {
                out.mask(x, y) = 1;
                if (has_parts) out.parts(x, y) = seg.parts(xi, yi);
            }
        }
    }
    if (!has_parts) out.parts = LabelMap();
    return out;
}

Point2 centroid(const BinaryMask& m) {
    double sx = 0.0;
    double sy = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m(x, y)) {
                sx += x;
                sy += y;
                ++n;
            }
    if (n == 0) throw Error(ErrorCode::EmptyMask, "segment mask is empty");
    return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

// Euclidean distance from each pixel to the nearest pixel of the other class
// (mask vs. not mask); pixels beyond the border belong to neither.
std::vector<double> seam_distance(const BinaryMask& m, int pad) {
    const int w = m.width();
    const int h = m.height();
    const int pw = w + 2 * pad;
    const int ph = h + 2 * pad;
    BinaryMask in(pw, ph, 1);
    BinaryMask out(pw, ph, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            in(x + pad, y + pad) = m(x, y);
            out(x + pad, y + pad) = m(x, y) ? 0 : 1;
        }
    const DistanceMap din = distance_transform(in);
    const DistanceMap dout = distance_transform(out);
    std::vector<double> d(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            d[static_cast<std::size_t>(y) * w + x] =
                m(x, y) ? din(x + pad, y + pad) : dout(x + pad, y + pad);
    return d;
}

ImageRgb median_downsample(const ImageRgb& img) {
    const int w = (img.width() + 1) / 2;
    const int h = (img.height() + 1) / 2;
    ImageRgb out(w, h);
    std::array<std::uint8_t, 9> v{};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                int k = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int sx = std::clamp(2 * x + dx, 0, img.width() - 1);
                        const int sy = std::clamp(2 * y + dy, 0, img.height() - 1);
                        v[static_cast<std::size_t>(k++)] = img.at(sx, sy, c);
                    }
                std::nth_element(v.begin(), v.begin() + 4, v.end());
                out.at(x, y, c) = v[4];
            }
    return out;
}

}  // namespace

const char* to_string(Smoothing s) {
    switch (s) {
        case Smoothing::None: return "none";
        case Smoothing::Gaussian: return "gaussian";
        case Smoothing::MedianPyramid: return "median_pyramid";
    }
    return "?";
}

void AugmentConfig::validate() const {
    if (!(rotation_range[0] <= rotation_range[1]))
        throw Error(ErrorCode::InvalidArgument, "rotation range is not ordered");
    if (!(scale_range[0] <= scale_range[1]) || !(scale_range[0] > 0.0))
        throw Error(ErrorCode::InvalidArgument, "scale range must be ordered and positive");
    if (!(tps_max_shift >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tps_max_shift must be >= 0");
    if (!(gaussian_sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "gaussian_sigma must be > 0");
    if (pyramid_levels < 1 || pyramid_levels > 8)
        throw Error(ErrorCode::InvalidArgument, "pyramid_levels must be in [1, 8]");
    if (!(max_center_distance >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "max_center_distance must be >= 0");
    if (!(min_bbox_overlap >= 0.0 && min_bbox_overlap <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "min_bbox_overlap must be in [0, 1]");
}

double AugmentConfig::seam_band() const {
    switch (smoothing) {
        case Smoothing::None: return 0.0;
        case Smoothing::Gaussian: return 3.0 * gaussian_sigma;
        case Smoothing::MedianPyramid: return std::ldexp(1.0, pyramid_levels);
    }
    return 0.0;
}

// --- thin-plate spline -------------------------------------------------------

double tps_kernel(double r) { return r <= 0.0 ? 0.0 : r * r * std::log(r); }

Point2 TpsWarp::operator()(Point2 p) const {
    double fx = affine[0] + affine[1] * p.x + affine[2] * p.y;
    double fy = affine[3] + affine[4] * p.x + affine[5] * p.y;
    for (std::size_t i = 0; i < source.size(); ++i) {
        const double u = tps_kernel(std::hypot(p.x - source[i].x, p.y - source[i].y));
        fx += weights_x[i] * u;
        fy += weights_y[i] * u;
    }
    return {fx, fy};
}

double TpsWarp::bending_energy() const {
    double e = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i)
        for (std::size_t j = 0; j < source.size(); ++j) {
            const double k = tps_kernel(std::hypot(source[i].x - source[j].x, source[i].y - source[j].y));
            e += k * (weights_x[i] * weights_x[j] + weights_y[i] * weights_y[j]);
        }
    return e;
}

TpsWarp tps_fit(std::span<const Point2> src, std::span<const Point2> dst, double regularization) {
    if (src.size() != dst.size())
        throw Error(ErrorCode::InvalidArgument, "control point lists differ in size");
    const std::size_t n = src.size();
    if (n < 3) throw Error(ErrorCode::SingularSystem, "need at least three control points");

    // Solve in centred, unit-RMS coordinates; the spline is the same function
    // up to an affine term, which is folded back below.
    double mx = 0.0;
    double my = 0.0;
    for (const Point2& p : src) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double rms = 0.0;
    for (const Point2& p : src) rms += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
    rms = std::sqrt(rms / static_cast<double>(n));
    if (!(rms > 0.0)) throw Error(ErrorCode::SingularSystem, "control points coincide");
    const double c = rms;

    std::vector<Point2> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = {(src[i].x - mx) / c, (src[i].y - my) / c};

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::hypot(q[i].x - q[j].x, q[i].y - q[j].y) < 1e-9)
                throw Error(ErrorCode::SingularSystem, "duplicated control point");

    Eigen::MatrixXd P(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) P.row(static_cast<Eigen::Index>(i)) << 1.0, q[i].x, q[i].y;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    if (svd.singularValues()(2) < 1e-9 * svd.singularValues()(0))
        throw Error(ErrorCode::SingularSystem, "control points are collinear");

    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N + 3, N + 3);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j)
            L(i, j) = tps_kernel(std::hypot(q[static_cast<std::size_t>(i)].x - q[static_cast<std::size_t>(j)].x,
                                            q[static_cast<std::size_t>(i)].y - q[static_cast<std::size_t>(j)].y));
    for (Eigen::Index i = 0; i < N; ++i) L(i, i) += regularization;
    L.block(0, N, N, 3) = P;
    L.block(N, 0, 3, N) = P.transpose();

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(N + 3, 2);
    for (Eigen::Index i = 0; i < N; ++i) {
        rhs(i, 0) = dst[static_cast<std::size_t>(i)].x;
        rhs(i, 1) = dst[static_cast<std::size_t>(i)].y;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularSystem, "TPS system is singular");
    Eigen::MatrixXd sol = lu.solve(rhs);
    sol += lu.solve(rhs - L * sol);  // one refinement step

    TpsWarp warp;
    warp.source.assign(src.begin(), src.end());
    warp.target.assign(dst.begin(), dst.end());
    warp.weights_x.resize(n);
    warp.weights_y.resize(n);
    const double inv_c2 = 1.0 / (c * c);
    const double logc = std::log(c);
    for (int axis = 0; axis < 2; ++axis) {
        double shift = 0.0;
        for (Eigen::Index i = 0; i < N; ++i) {
            const double wq = sol(i, axis);
            const Point2& s = src[static_cast<std::size_t>(i)];
            shift += wq * (s.x * s.x + s.y * s.y);
            (axis == 0 ? warp.weights_x : warp.weights_y)[static_cast<std::size_t>(i)] = wq * inv_c2;
        }
        const double a0 = sol(N, axis);
        const double a1 = sol(N + 1, axis);
        const double a2 = sol(N + 2, axis);
        const std::size_t o = axis == 0 ? 0 : 3;
        warp.affine[o + 1] = a1 / c;
        warp.affine[o + 2] = a2 / c;
        warp.affine[o] = a0 - a1 * mx / c - a2 * my / c - logc * inv_c2 * shift;
    }
    return warp;
}

// --- segment operations ------------------------------------------------------

ImageRgb cut_and_inpaint(const ImageRgb& frame, const BinaryMask& instance_mask,
                         const BackgroundModel& bg) {
    if (!frame.same_shape(instance_mask) || !frame.same_shape(bg.background))
        throw Error(ErrorCode::DimensionMismatch, "frame, mask and background differ in size");
    const BinaryMask cut = dilate(instance_mask, kCutDilation);
    ImageRgb out = frame;
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x)
            if (cut(x, y))
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = bg.background.at(x, y, c);
    return out;
}

Segment rigid_transform_patch(const Segment& seg, double angle_deg, double scale) {
    if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
    if (!seg.image.same_shape(seg.mask))
        throw Error(ErrorCode::DimensionMismatch, "patch and mask differ in size");
    const Point2 c = centroid(seg.mask);
    const double th = angle_deg * std::numbers::pi / 180.0;
    const double ct = std::cos(th);
    const double st = std::sin(th);
    auto fwd = [&](Point2 p) {
        const double dx = p.x - c.x;
        const double dy = p.y - c.y;
        return Point2{c.x + scale * (ct * dx - st * dy), c.y + scale * (st * dx + ct * dy)};
    };
    Segment out = resample(seg, fwd, [&](Point2 p) {
        const double dx = (p.x - c.x) / scale;
        const double dy = (p.y - c.y) / scale;
        return Point2{c.x + ct * dx + st * dy, c.y - st * dx + ct * dy};
    });
    out.keypoints = seg.keypoints;
    for (std::size_t i = 0; i < 3; ++i) {
        Keypoint& k = out.keypoints[i];
        if (k.visibility == 0) continue;
        const double dx = k.x - c.x;
        const double dy = k.y - c.y;
        k.x = c.x + scale * (ct * dx - st * dy);
        k.y = c.y + scale * (st * dx + ct * dy);
    }
    return out;
}

Segment tps_apply(const TpsWarp& warp, const Segment& seg) {
    if (!seg.image.same_shape(seg.mask))
        throw Error(ErrorCode::DimensionMismatch, "patch and mask differ in size");
    const TpsWarp inverse = tps_fit(warp.target, warp.source);
    Segment out = resample(seg, [&](Point2 p) { return warp(p); }, [&](Point2 p) { return inverse(p); });
    out.keypoints = seg.keypoints;
    for (std::size_t i = 0; i < 3; ++i) {
        Keypoint& k = out.keypoints[i];
        if (k.visibility == 0) continue;
        const Point2 t = warp(Point2{k.x, k.y});
        k.x = t.x;
        k.y = t.y;
    }
    return out;
}

ImageRgb paste_with_seam(const ImageRgb& canvas, const ImageRgb& patch, const BinaryMask& mask,
                         Pixel offset, const AugmentConfig& cfg) {
    if (!patch.same_shape(mask)) throw Error(ErrorCode::DimensionMismatch, "patch and mask differ in size");
    const int w = canvas.width();
    const int h = canvas.height();

    BinaryMask m(w, h, 0);
    std::size_t total = 0;
    std::size_t inside = 0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(x, y)) continue;
            ++total;
            if (m.contains(x + offset.x, y + offset.y)) {
                m(x + offset.x, y + offset.y) = 1;
                ++inside;
            }
        }
    if (total == 0 || 2 * inside < total)
        throw Error(ErrorCode::OutOfBounds, "less than half of the pasted mask lies on the canvas");

    // Patch value at a canvas pixel, or the canvas itself where the patch
    // does not reach.
    auto patch_at = [&](int x, int y, int c) -> double {
        const int px = x - offset.x;
        const int py = y - offset.y;
        if (!patch.contains(px, py)) return canvas.at(x, y, c);
        return patch.at(px, py, c);
    };

    ImageRgb out = canvas;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (m(x, y))
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<std::uint8_t>(patch_at(x, y, c));
    if (cfg.smoothing == Smoothing::None) return out;

    const BoundingBox bb = bounding_box(m);
    if (cfg.smoothing == Smoothing::Gaussian) {
        const double rad = 3.0 * cfg.gaussian_sigma;
        const int r = static_cast<int>(std::floor(rad));
        struct Tap {
            int dx, dy;
            double w;
        };
        std::vector<Tap> taps;
        double norm = 0.0;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                const double d2 = static_cast<double>(dx * dx + dy * dy);
                if (d2 > rad * rad) continue;
                const double wt = std::exp(-d2 / (2.0 * cfg.gaussian_sigma * cfg.gaussian_sigma));
                taps.push_back({dx, dy, wt});
                norm += wt;
            }
        const int x0 = std::max(0, static_cast<int>(bb.x) - r);
        const int y0 = std::max(0, static_cast<int>(bb.y) - r);
        const int x1 = std::min(w - 1, static_cast<int>(bb.x + bb.w) - 1 + r);
        const int y1 = std::min(h - 1, static_cast<int>(bb.y + bb.h) - 1 + r);
#pragma omp parallel for schedule(static)
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                double a = 0.0;
                for (const Tap& t : taps)
                    if (m.contains(x + t.dx, y + t.dy) && m(x + t.dx, y + t.dy)) a += t.w;
                a /= norm;
                if (a == 0.0) continue;
                for (int c = 0; c < 3; ++c)
                    out.at(x, y, c) = to_byte(a * patch_at(x, y, c) + (1.0 - a) * canvas.at(x, y, c));
            }
        return out;
    }

    // Median pyramid: pixels at seam distance d in [2^(j-1), 2^j) take level
    // L - j + 1 of a median pyramid of the hard composite, so the seam itself
    // gets the coarsest level and the band fades back to full resolution.
    const int levels = cfg.pyramid_levels;
    const double band = std::ldexp(1.0, levels);
    const std::vector<double> d = seam_distance(m, static_cast<int>(band) + 1);
    std::vector<ImageRgb> pyr{out};
    for (int k = 1; k <= levels; ++k) pyr.push_back(median_downsample(pyr.back()));
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dd = d[static_cast<std::size_t>(y) * w + x];
            if (!(dd < band)) continue;
            const int k = std::clamp(levels - static_cast<int>(std::floor(std::log2(dd))), 1, levels);
            const double s = std::ldexp(1.0, -k);
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = to_byte(bilinear(pyr[static_cast<std::size_t>(k)], x * s, y * s, c));
        }
    return out;
}

// --- sample synthesis --------------------------------------------------------

void draw_transform(Rng& rng, const AugmentConfig& cfg, AugmentDraw& draw) {
    draw.angle_deg = rng.uniform(cfg.rotation_range[0], cfg.rotation_range[1]);
    draw.scale = rng.uniform(cfg.scale_range[0], cfg.scale_range[1]);
    for (Point2& s : draw.keypoint_shift) {
        const double r = cfg.tps_max_shift * std::sqrt(rng.uniform());
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        s = {r * std::cos(phi), r * std::sin(phi)};
    }
}

namespace {

double box_overlap(const BoundingBox& a, const BoundingBox& b) {
    const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double small = std::min(a.area(), b.area());
    return small > 0.0 ? iw * ih / small : 0.0;
}

Segment make_segment(const ImageRgb& frame, const InstanceAnnotation& ann, const BackgroundModel& bg) {
    Segment seg;
    seg.image = bg.background;
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x)
            if (ann.mask(x, y))
                for (int c = 0; c < 3; ++c) seg.image.at(x, y, c) = frame.at(x, y, c);
    seg.mask = ann.mask;
    seg.parts = ann.parts.same_shape(ann.mask) ? ann.parts : LabelMap(frame.width(), frame.height(), 0);
    seg.keypoints = ann.keypoints;
    return seg;
}

}  // namespace

TpsWarp keypoint_warp(const Segment& seg, const std::array<Point2, 3>& shift, double margin) {
    if (area(seg.mask) == 0) throw Error(ErrorCode::EmptyMask, "segment mask is empty");
    const BoundingBox bb = bounding_box(seg.mask);
    const double x0 = bb.x - margin;
    const double y0 = bb.y - margin;
    const double x1 = bb.x + bb.w - 1 + margin;
    const double y1 = bb.y + bb.h - 1 + margin;
    std::vector<Point2> src{{x0, y0}, {x1, y0}, {x0, y1}, {x1, y1}};
    std::vector<Point2> dst = src;
    for (std::size_t i = 0; i < 3; ++i) {
        const Keypoint& k = seg.keypoints[i];
        if (k.visibility == 0) continue;
        const Point2 p{k.x, k.y};
        const bool dup = std::any_of(src.begin(), src.end(), [&](const Point2& s) {
            return std::hypot(s.x - p.x, s.y - p.y) < 1e-6;
        });
        if (dup) continue;
        src.push_back(p);
        dst.push_back({p.x + shift[i].x, p.y + shift[i].y});
    }
    return tps_fit(src, dst);
}

AugmentSample synthesize_occlusion_sample(const ImageRgb& frame,
                                          const std::vector<InstanceAnnotation>& annotations,
                                          const BackgroundModel& bg, const AugmentConfig& cfg,
                                          std::uint64_t seed) {
    cfg.validate();
    if (annotations.size() < 2)
        throw Error(ErrorCode::TooFewInstances, "occlusion synthesis needs two instances");
    for (const InstanceAnnotation& a : annotations)
        if (!frame.same_shape(a.mask))
            throw Error(ErrorCode::DimensionMismatch, "annotation mask does not match the frame");
    if (!frame.same_shape(bg.background))
        throw Error(ErrorCode::DimensionMismatch, "background does not match the frame");

    Rng rng(seed);
    AugmentSample sample;
    AugmentDraw& draw = sample.draw;
    draw.seed = seed;
    draw.smoothing = cfg.smoothing;
    const auto n = static_cast<std::int64_t>(annotations.size());
    draw.mover = static_cast<int>(rng.uniform_int(0, n - 1));
    draw.target = static_cast<int>(rng.uniform_int(0, n - 2));
    if (draw.target >= draw.mover) ++draw.target;
    draw_transform(rng, cfg, draw);

    const InstanceAnnotation& mover = annotations[static_cast<std::size_t>(draw.mover)];
    const InstanceAnnotation& target = annotations[static_cast<std::size_t>(draw.target)];
    const ImageRgb cut = cut_and_inpaint(frame, mover.mask, bg);

    Segment seg = rigid_transform_patch(make_segment(frame, mover, bg), draw.angle_deg, draw.scale);
    if (area(seg.mask) == 0) throw Error(ErrorCode::PlacementFailure, "segment left the canvas");
    seg = tps_apply(keypoint_warp(seg, draw.keypoint_shift, 2.0 * cfg.tps_max_shift + kCornerMargin), seg);
    if (area(seg.mask) == 0) throw Error(ErrorCode::PlacementFailure, "segment left the canvas");

    const BoundingBox sb = bounding_box(seg.mask);
    const BoundingBox tb = target.bbox;
    const double scx = sb.x + sb.w / 2.0;
    const double scy = sb.y + sb.h / 2.0;
    const double tcx = tb.x + tb.w / 2.0;
    const double tcy = tb.y + tb.h / 2.0;
    const std::size_t seg_area = area(seg.mask);
    bool placed = false;
    for (int attempt = 1; attempt <= kPlacementAttempts && !placed; ++attempt) {
        draw.placement_attempts = attempt;
        const double r = cfg.max_center_distance * std::sqrt(rng.uniform());
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        const Pixel off{static_cast<int>(std::lround(tcx + r * std::cos(phi) - scx)),
                        static_cast<int>(std::lround(tcy + r * std::sin(phi) - scy))};
        BoundingBox moved = sb;
        moved.x += off.x;
        moved.y += off.y;
        if (box_overlap(moved, tb) < cfg.min_bbox_overlap) continue;
        std::size_t inside = 0;
        for (int y = static_cast<int>(sb.y); y < static_cast<int>(sb.y + sb.h); ++y)
            for (int x = static_cast<int>(sb.x); x < static_cast<int>(sb.x + sb.w); ++x)
                if (seg.mask(x, y) && frame.contains(x + off.x, y + off.y)) ++inside;
        if (2 * inside < seg_area) continue;
        draw.offset = off;
        placed = true;
    }
    if (!placed) throw Error(ErrorCode::PlacementFailure, "no placement near the target instance");

    sample.image = paste_with_seam(cut, seg.image, seg.mask, draw.offset, cfg);

    const int w = frame.width();
    const int h = frame.height();
    BinaryMask pasted(w, h, 0);
    LabelMap pasted_parts(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (seg.mask(x, y) && pasted.contains(x + draw.offset.x, y + draw.offset.y)) {
                pasted(x + draw.offset.x, y + draw.offset.y) = 1;
                pasted_parts(x + draw.offset.x, y + draw.offset.y) = seg.parts(x, y);
            }
    const BinaryMask removed = mask_or(pasted, dilate(mover.mask, kCutDilation));

    for (std::size_t i = 0; i < annotations.size(); ++i) {
        if (static_cast<int>(i) == draw.mover) {
            InstanceAnnotation a = mover;
            a.mask = pasted;
            a.parts = pasted_parts;
            a.bbox = bounding_box(pasted);
            a.source = Source::Augmented;
            for (std::size_t k = 0; k < 3; ++k) {
                Keypoint& kp = a.keypoints[k];
                if (kp.visibility == 0) continue;
                kp.x = seg.keypoints[k].x + draw.offset.x;
                kp.y = seg.keypoints[k].y + draw.offset.y;
                if (kp.x < 0.0 || kp.y < 0.0 || kp.x > w - 1 || kp.y > h - 1) kp = Keypoint{};
            }
            sample.annotations.push_back(std::move(a));
            continue;
        }
        InstanceAnnotation a = annotations[i];
        a.mask = mask_and_not(a.mask, removed);
        if (area(a.mask) == 0) continue;  // fully covered
        if (a.parts.same_shape(a.mask))
            for (std::size_t p = 0; p < a.parts.size(); ++p)
                if (!a.mask[p]) a.parts[p] = 0;
        a.bbox = bounding_box(a.mask);
        for (std::size_t k = 0; k < 3; ++k) {
            Keypoint& kp = a.keypoints[k];
            if (kp.visibility == 0) continue;
            const int xi = static_cast<int>(std::lround(kp.x));
            const int yi = static_cast<int>(std::lround(kp.y));
            if (pasted.contains(xi, yi) && pasted(xi, yi)) kp.visibility = 1;
        }
        sample.annotations.push_back(std::move(a));
    }
    return sample;
}

}  // namespace ratseg
