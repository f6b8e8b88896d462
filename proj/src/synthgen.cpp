#include "ratseg/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace ratseg {

namespace {

constexpr double kPi = std::numbers::pi;

Point2 add(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
Point2 sub(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
Point2 mul(Point2 a, double s) { return {a.x * s, a.y * s}; }
double norm(Point2 a) { return std::hypot(a.x, a.y); }

Point2 rotate(Point2 v, double a) {
    return {v.x * std::cos(a) - v.y * std::sin(a), v.x * std::sin(a) + v.y * std::cos(a)};
}

void scale_about(std::array<Point2, 3>& c, Point2 origin, double s) {
    for (Point2& p : c) p = add(origin, mul(sub(p, origin), s));
}

// Integer window [x0, x1) x [y0, y1) on the canvas.
struct Window {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int width() const { return std::max(0, x1 - x0); }
    int height() const { return std::max(0, y1 - y0); }
};

Window box_window(const BoundingBox& b) {
    return {static_cast<int>(b.x), static_cast<int>(b.y), static_cast<int>(b.x + b.w),
            static_cast<int>(b.y + b.h)};
}

// `m` covers window `w`; the disc is tested in canvas coordinates.
void stamp_disc(BinaryMask& m, const Window& w, Point2 c, double r) {
    const int x0 = std::max(w.x0, static_cast<int>(std::floor(c.x - r)));
    const int x1 = std::min(w.x1 - 1, static_cast<int>(std::ceil(c.x + r)));
    const int y0 = std::max(w.y0, static_cast<int>(std::floor(c.y - r)));
    const int y1 = std::min(w.y1 - 1, static_cast<int>(std::ceil(c.y + r)));
    const double r2 = r * r;
    for (int y = y0; y <= y1; ++y) {
        const double dy = y - c.y;
        auto in = [&](int x) {
            const double dx = x - c.x;
            return dx * dx + dy * dy <= r2;
        };
        // The row's span from sqrt, then corrected against the exact test.
        const double half = std::sqrt(std::max(0.0, r2 - dy * dy));
        int a = std::clamp(static_cast<int>(std::ceil(c.x - half)), x0, x1);
        int b = std::clamp(static_cast<int>(std::floor(c.x + half)), x0, x1);
        while (a > x0 && in(a - 1)) --a;
        while (a <= x1 && !in(a)) ++a;
        while (b < x1 && in(b + 1)) ++b;
        while (b >= a && !in(b)) --b;
        for (int x = a; x <= b; ++x) m(x - w.x0, y - w.y0) = 1;
    }
}

// Samples of a Bezier at roughly quarter-pixel arc spacing, with the arc
// fraction of each sample.
struct ArcSample {
    Point2 p;
    double t;
    double u;
};

std::vector<ArcSample> arc_samples(const std::array<Point2, 3>& c) {
    const double len = bezier_length(c);
    const int steps = std::max(8, static_cast<int>(std::ceil(4.0 * len)));
    std::vector<ArcSample> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    double cum = 0.0;
    Point2 prev = c[0];
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        const Point2 p = bezier_point(c, t);
        cum += norm(sub(p, prev));
        prev = p;
        out.push_back({p, t, cum});
    }
    for (ArcSample& s : out) s.u = cum > 0.0 ? s.u / cum : 0.0;
    return out;
}

Pixel nearest_set_pixel(const BinaryMask& m, Point2 p) {
    const Pixel r{static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
    if (m.contains(r.x, r.y) && m(r.x, r.y)) return r;
    Pixel best{-1, -1};
    double bd = 1e300;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m(x, y)) {
                const double d = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
                if (d < bd) {
                    bd = d;
                    best = {x, y};
                }
            }
    return best;
}

std::size_t overlap(const BinaryMask& a, const BoundingBox& ba, const BinaryMask& b,
                    const BoundingBox& bb) {
    const Window wa = box_window(ba), wb = box_window(bb);
    std::size_t n = 0;
    for (int y = std::max(wa.y0, wb.y0); y < std::min(wa.y1, wb.y1); ++y)
        for (int x = std::max(wa.x0, wb.x0); x < std::min(wa.x1, wb.x1); ++x)
            n += (a(x, y) && b(x, y)) ? 1 : 0;
    return n;
}

// True when no pixel of b lies within `dist` of a pixel of a. `ba` and `bb`
// are the bounding boxes of the masks.
bool separated(const BinaryMask& a, const BoundingBox& ba, const BinaryMask& b,
               const BoundingBox& bb, double dist) {
    if (bb.x > ba.x + ba.w + dist || ba.x > bb.x + bb.w + dist || bb.y > ba.y + ba.h + dist ||
        ba.y > bb.y + bb.h + dist)
        return true;
    const Window wa = box_window(ba);
    std::vector<Pixel> edge;
    for (int y = wa.y0; y < wa.y1; ++y)
        for (int x = wa.x0; x < wa.x1; ++x) {
            if (!a(x, y)) continue;
            const bool inner = x > 0 && y > 0 && x + 1 < a.width() && y + 1 < a.height() &&
                               a(x - 1, y) && a(x + 1, y) && a(x, y - 1) && a(x, y + 1);
            if (!inner) edge.push_back({x, y});
        }
    const double d2 = dist * dist;
    const int x0 = std::max(0, static_cast<int>(ba.x - dist - 1));
    const int x1 = std::min(b.width() - 1, static_cast<int>(ba.x + ba.w + dist + 1));
    const int y0 = std::max(0, static_cast<int>(ba.y - dist - 1));
    const int y1 = std::min(b.height() - 1, static_cast<int>(ba.y + ba.h + dist + 1));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            if (!b(x, y)) continue;
            if (a(x, y)) return false;
            for (const Pixel& e : edge) {
                const double dx = e.x - x, dy = e.y - y;
                if (dx * dx + dy * dy < d2) return false;
            }
        }
    return true;
}

RatPlacement random_placement(Rng& rng, const SceneSpec& spec) {
    RatPlacement p;
    const double margin = 60.0 * spec.scale();
    p.center = {rng.uniform(margin, spec.width - 1 - margin),
                rng.uniform(margin, spec.height - 1 - margin)};
    p.heading = rng.uniform(0.0, 2.0 * kPi);
    p.bend = rng.uniform(spec.ranges.bend[0], spec.ranges.bend[1]);
    p.tail_bend = rng.uniform(spec.ranges.tail_bend[0], spec.ranges.tail_bend[1]);
    return p;
}

struct Layout {
    std::vector<RatPose> poses;
    std::vector<RenderedRat> renders;
};

// Renders the placements and checks canvas fit, pose validity and the
// occlusion-mode constraints.
std::optional<Layout> build_layout(const SceneSpec& spec, const std::vector<RatShape>& shapes,
                                   const std::vector<RatPlacement>& placements) {
    Layout lay;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        RatPose pose = make_pose(shapes[i], placements[i]);
        try {
            validate_pose(pose);
        } catch (const Error&) {
            return std::nullopt;
        }
        RenderedRat r = render_rat(pose, spec.width, spec.height);
        const BoundingBox b = r.truth.bbox;
        if (b.w == 0) return std::nullopt;
        if (b.x < 2 || b.y < 2 || b.x + b.w > spec.width - 2 || b.y + b.h > spec.height - 2)
            return std::nullopt;
        lay.poses.push_back(pose);
        lay.renders.push_back(std::move(r));
    }
    const std::size_t n = lay.renders.size();
    auto sil = [&](std::size_t i) -> const BinaryMask& { return lay.renders[i].silhouette; };
    auto box = [&](std::size_t i) -> const BoundingBox& { return lay.renders[i].truth.bbox; };
    std::vector<std::size_t> areas(n);
    for (std::size_t i = 0; i < n; ++i) areas[i] = area(sil(i));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double smaller = static_cast<double>(std::min(areas[i], areas[j]));
            const double ov = static_cast<double>(overlap(sil(i), box(i), sil(j), box(j)));
            const bool paired = i == 0 && j == 1;
            switch (spec.occlusion) {
                case OcclusionMode::None:
                    if (!separated(sil(i), box(i), sil(j), box(j), 10.0)) return std::nullopt;
                    break;
                case OcclusionMode::Partial: {
                    if (ov > 0.3 * smaller) return std::nullopt;
                    if (paired) {
                        const BoundingBox& a = box(i);
                        const BoundingBox& b = box(j);
                        const bool boxes_meet = a.x < b.x + b.w && b.x < a.x + a.w &&
                                                a.y < b.y + b.h && b.y < a.y + a.h;
                        if (!boxes_meet) return std::nullopt;
                    }
                    break;
                }
                case OcclusionMode::Mounting:
                    if (paired ? ov < 0.5 * smaller : !separated(sil(i), box(i), sil(j), box(j), 10.0))
                        return std::nullopt;
                    break;
            }
        }
    return lay;
}

std::vector<RatPlacement> sample_placements(Rng& rng, const SceneSpec& spec,
                                            const std::vector<RatShape>& shapes) {
    std::vector<RatPlacement> out;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        RatPlacement p = random_placement(rng, spec);
        if (i == 1 && spec.occlusion != OcclusionMode::None) {
            const RatPlacement& a = out[0];
            const double reach = spec.occlusion == OcclusionMode::Mounting
                                     ? rng.uniform(0.0, 0.3) * shapes[0].body_length
                                     : rng.uniform(0.6, 1.2) * shapes[0].body_length;
            const double dir = rng.uniform(0.0, 2.0 * kPi);
            p.center = {a.center.x + reach * std::cos(dir), a.center.y + reach * std::sin(dir)};
            if (spec.occlusion == OcclusionMode::Mounting) p.heading = a.heading + rng.uniform(-0.6, 0.6);
        }
        out.push_back(p);
    }
    return out;
}

// Brightest rats are drawn last; truths carry the visible parts only.
Scene compose(const SceneSpec& spec, const ImageRgb& background, Layout lay, Rng& noise) {
    const std::size_t n = lay.renders.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return lay.poses[a].intensity < lay.poses[b].intensity;
    });

    Scene scene;
    scene.frame = background;
    std::vector<int> draw_rank(n);
    for (std::size_t k = 0; k < n; ++k) draw_rank[order[k]] = static_cast<int>(k);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        const BinaryMask& s = lay.renders[i].silhouette;
        const Window w = box_window(lay.renders[i].truth.bbox);
        const auto v = static_cast<std::uint8_t>(lay.poses[i].intensity);
        for (int y = w.y0; y < w.y1; ++y)
            for (int x = w.x0; x < w.x1; ++x)
                if (s(x, y))
                    for (int c = 0; c < 3; ++c) scene.frame.at(x, y, c) = v;
    }
    if (spec.noise_sigma > 0.0) {
        for (std::uint8_t& px : scene.frame.data()) {
            const double v = std::lround(px + spec.noise_sigma * noise.normal());
            px = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        GroundTruth gt = lay.renders[i].truth;
        for (std::size_t j = 0; j < n; ++j) {
            if (draw_rank[j] <= draw_rank[i]) continue;
            const BinaryMask& over = lay.renders[j].silhouette;
            const Window w = box_window(lay.renders[j].truth.bbox);
            for (int y = w.y0; y < w.y1; ++y)
                for (int x = w.x0; x < w.x1; ++x)
                    if (over(x, y)) {
                        gt.mask(x, y) = 0;
                        gt.parts(x, y) = 0;
                    }
        }
        for (std::size_t k = 0; k < 3; ++k) {
            Keypoint& kp = gt.keypoints[k];
            const int x = static_cast<int>(std::lround(kp.x));
            const int y = static_cast<int>(std::lround(kp.y));
            kp.visibility = gt.mask.contains(x, y) && gt.mask(x, y) ? 2 : 1;
        }
        if (area(gt.mask) > 0) gt.bbox = bounding_box(gt.mask);
        scene.truths.push_back(std::move(gt));
    }
    scene.poses = std::move(lay.poses);
    return scene;
}

bool visible_enough(const Scene& s, const Layout& lay) {
    for (std::size_t i = 0; i < s.truths.size(); ++i)
        if (area(s.truths[i].mask) * 5 < area(lay.renders[i].silhouette)) return false;
    return true;
}

double lerp_angle(double a, double b, double t) {
    double d = std::remainder(b - a, 2.0 * kPi);
    return a + t * d;
}

}  // namespace

Point2 bezier_point(const std::array<Point2, 3>& c, double t) {
    const double s = 1.0 - t;
    return {s * s * c[0].x + 2 * s * t * c[1].x + t * t * c[2].x,
            s * s * c[0].y + 2 * s * t * c[1].y + t * t * c[2].y};
}

Point2 bezier_tangent(const std::array<Point2, 3>& c, double t) {
    const Point2 d = add(mul(sub(c[1], c[0]), 2 * (1 - t)), mul(sub(c[2], c[1]), 2 * t));
    const double l = norm(d);
    return l > 0.0 ? mul(d, 1.0 / l) : Point2{1.0, 0.0};
}

double bezier_length(const std::array<Point2, 3>& c) {
    double len = 0.0;
    Point2 prev = c[0];
    for (int i = 1; i <= 512; ++i) {
        const Point2 p = bezier_point(c, i / 512.0);
        len += norm(sub(p, prev));
        prev = p;
    }
    return len;
}

double body_halfwidth(const RatPose& pose, double t) {
    return std::max(1.0, pose.max_body_halfwidth * std::sin(kPi * 0.85 * t));
}

double tail_halfwidth(const RatPose& pose, double u) {
    return pose.tail_base_halfwidth + (1.0 - pose.tail_base_halfwidth) * std::clamp(u, 0.0, 1.0);
}

void validate_pose(const RatPose& p) {
    auto fail = [](const char* what) { throw Error(ErrorCode::PoseInvalid, what); };
    if (!(p.body_length > 0.0) || !(p.tail_length > 0.0)) fail("pose lengths must be positive");
    const double ratio = p.tail_length / p.body_length;
    if (ratio < 0.7 - 1e-9 || ratio > 1.3 + 1e-9) fail("tail/body ratio outside [0.7, 1.3]");
    if (!(p.head_radius > 0.0) || p.head_radius >= 1.5 * p.max_body_halfwidth)
        fail("head radius must be positive and below 1.5x body halfwidth");
    if (p.tail_base_halfwidth < 1.0) fail("tail base halfwidth below 1");
    if (p.intensity < 180 || p.intensity > 255) fail("intensity outside [180, 255]");

    // The tail may only touch the body at its base.
    const std::vector<ArcSample> spine = arc_samples(p.spine);
    const std::vector<ArcSample> tail = arc_samples(p.tail);
    std::vector<double> bw(spine.size());
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300, bw_max = 0.0;
    for (std::size_t i = 0; i < spine.size(); ++i) {
        bw[i] = body_halfwidth(p, spine[i].t);
        bw_max = std::max(bw_max, bw[i]);
        x0 = std::min(x0, spine[i].p.x);
        x1 = std::max(x1, spine[i].p.x);
        y0 = std::min(y0, spine[i].p.y);
        y1 = std::max(y1, spine[i].p.y);
    }
    const double clear = body_halfwidth(p, 1.0) + p.tail_base_halfwidth + 2.0;
    for (const ArcSample& ts : tail) {
        if (ts.u * p.tail_length <= clear) continue;
        const double tw = tail_halfwidth(p, ts.u);
        if (norm(sub(ts.p, p.spine[0])) <= p.head_radius + tw) fail("tail crosses the head");
        const double reach = bw_max + tw;
        if (ts.p.x < x0 - reach || ts.p.x > x1 + reach || ts.p.y < y0 - reach || ts.p.y > y1 + reach)
            continue;
        for (std::size_t i = 0; i < spine.size(); ++i) {
            const double dx = std::abs(ts.p.x - spine[i].p.x);
            const double dy = std::abs(ts.p.y - spine[i].p.y);
            if (dx > bw[i] + tw || dy > bw[i] + tw) continue;  // hypot >= max(dx, dy)
            if (norm(sub(ts.p, spine[i].p)) <= bw[i] + tw) fail("tail crosses the body");
        }
    }
}

RenderedRat render_rat(const RatPose& pose, int width, int height) {
    validate_pose(pose);
    struct Disc {
        Point2 c;
        double r;
    };
    std::vector<Disc> body_discs, tail_discs;
    for (const ArcSample& s : arc_samples(pose.spine)) body_discs.push_back({s.p, body_halfwidth(pose, s.t)});
    for (const ArcSample& s : arc_samples(pose.tail)) tail_discs.push_back({s.p, tail_halfwidth(pose, s.u)});
    const Disc head_disc{pose.spine[0], pose.head_radius};

    Window w{width, height, 0, 0};
    auto grow = [&](const Disc& d) {
        w.x0 = std::min(w.x0, static_cast<int>(std::floor(d.c.x - d.r)));
        w.y0 = std::min(w.y0, static_cast<int>(std::floor(d.c.y - d.r)));
        w.x1 = std::max(w.x1, static_cast<int>(std::ceil(d.c.x + d.r)) + 1);
        w.y1 = std::max(w.y1, static_cast<int>(std::ceil(d.c.y + d.r)) + 1);
    };
    for (const Disc& d : body_discs) grow(d);
    for (const Disc& d : tail_discs) grow(d);
    grow(head_disc);
    w = {std::max(w.x0, 0), std::max(w.y0, 0), std::min(w.x1, width), std::min(w.y1, height)};
    if (w.width() == 0 || w.height() == 0) w = {0, 0, 0, 0};

    BinaryMask body(w.width(), w.height(), 0);
    BinaryMask head(w.width(), w.height(), 0);
    BinaryMask tail(w.width(), w.height(), 0);
    for (const Disc& d : body_discs) stamp_disc(body, w, d.c, d.r);
    stamp_disc(head, w, head_disc.c, head_disc.r);
    for (const Disc& d : tail_discs) stamp_disc(tail, w, d.c, d.r);

    RenderedRat out;
    GroundTruth& gt = out.truth;
    gt.mask = BinaryMask(width, height, 0);
    gt.parts = LabelMap(width, height, 0);
    for (int y = 0; y < w.height(); ++y)
        for (int x = 0; x < w.width(); ++x) {
            std::int32_t label = 0;
            if (tail(x, y)) label = static_cast<std::int32_t>(PartLabel::Tail);
            else if (body(x, y)) label = static_cast<std::int32_t>(PartLabel::Body);
            else if (head(x, y)) label = static_cast<std::int32_t>(PartLabel::Head);
            if (label) {
                gt.mask(x + w.x0, y + w.y0) = 1;
                gt.parts(x + w.x0, y + w.y0) = label;
            }
        }
    out.silhouette = gt.mask;

    const Point2 nose = sub(pose.spine[0], mul(bezier_tangent(pose.spine, 0.0), pose.head_radius));
    const Point2 junction = pose.spine[2];
    const Point2 tip = bezier_point(pose.tail, 1.0);
    const std::array<Point2, 3> pts{nose, junction, tip};
    for (std::size_t k = 0; k < 3; ++k) {
        Point2 p = pts[k];
        const int rx = static_cast<int>(std::lround(p.x));
        const int ry = static_cast<int>(std::lround(p.y));
        if (!gt.mask.contains(rx, ry) || !gt.mask(rx, ry)) {
            const Pixel q = nearest_set_pixel(gt.mask, p);
            if (q.x >= 0) p = {static_cast<double>(q.x), static_cast<double>(q.y)};
        }
        gt.keypoints[k] = {p.x, p.y, 2};
    }
    const BinaryMask local = crop(gt.mask, w.x0, w.y0, w.width(), w.height());
    if (area(local) > 0) {
        gt.bbox = bounding_box(local);
        gt.bbox.x += w.x0;
        gt.bbox.y += w.y0;
    }
    return out;
}

RatPose make_pose(const RatShape& shape, const RatPlacement& pl) {
    RatPose pose;
    const Point2 u{std::cos(pl.heading), std::sin(pl.heading)};
    const Point2 nrm{-u.y, u.x};
    const double L = shape.body_length;
    pose.spine = {add(pl.center, mul(u, 0.5 * L)), add(pl.center, mul(nrm, pl.bend * L)),
                  sub(pl.center, mul(u, 0.5 * L))};
    scale_about(pose.spine, pl.center, L / bezier_length(pose.spine));
    pose.body_length = L;
    pose.max_body_halfwidth = shape.max_body_halfwidth;
    pose.head_radius = shape.head_radius;

    const Point2 d = bezier_tangent(pose.spine, 1.0);
    const double T = shape.tail_length;
    const Point2 t0 = pose.spine[2];
    const Point2 t1 = add(t0, mul(d, 0.5 * T));
    pose.tail = {t0, t1, add(t1, mul(rotate(d, pl.tail_bend), 0.5 * T))};
    scale_about(pose.tail, t0, T / bezier_length(pose.tail));
    pose.tail_length = T;
    pose.tail_base_halfwidth = shape.tail_base_halfwidth;
    pose.intensity = shape.intensity;
    return pose;
}

RatShape sample_shape(Rng& rng, const ShapeRanges& r, double scale) {
    RatShape s;
    s.body_length = rng.uniform(r.body_length[0], r.body_length[1]) * scale;
    s.max_body_halfwidth = rng.uniform(r.max_body_halfwidth[0], r.max_body_halfwidth[1]) * scale;
    s.head_radius = rng.uniform(r.head_radius[0], r.head_radius[1]) * scale;
    s.tail_length = rng.uniform(r.tail_ratio[0], r.tail_ratio[1]) * s.body_length;
    s.tail_base_halfwidth =
        std::max(1.0, rng.uniform(r.tail_base_halfwidth[0], r.tail_base_halfwidth[1]) * scale);
    s.intensity = static_cast<int>(rng.uniform_int(r.intensity[0], r.intensity[1]));
    return s;
}

const char* to_string(OcclusionMode m) {
    switch (m) {
        case OcclusionMode::None: return "none";
        case OcclusionMode::Partial: return "partial";
        case OcclusionMode::Mounting: return "mounting";
    }
    return "unknown";
}

double SceneSpec::scale() const {
    return std::min(width / 640.0, height / 420.0);
}

void SceneSpec::validate() const {
    if (width < 64 || height < 64) throw Error(ErrorCode::InvalidArgument, "canvas must be >= 64x64");
    if (rat_count < 0) throw Error(ErrorCode::InvalidArgument, "rat_count must be >= 0");
    if (background_level < 0 || background_level + texture_amplitude > 255 || texture_amplitude < 0)
        throw Error(ErrorCode::InvalidArgument, "background level/texture outside [0, 255]");
    if (noise_sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
    if ((occlusion != OcclusionMode::None) && rat_count < 2)
        throw Error(ErrorCode::InvalidArgument, "occlusion modes need at least two rats");
    auto ordered = [](const auto& a) { return a[0] <= a[1]; };
    if (!ordered(ranges.body_length) || !ordered(ranges.max_body_halfwidth) ||
        !ordered(ranges.head_radius) || !ordered(ranges.tail_ratio) ||
        !ordered(ranges.tail_base_halfwidth) || !ordered(ranges.intensity) ||
        !ordered(ranges.bend) || !ordered(ranges.tail_bend))
        throw Error(ErrorCode::InvalidArgument, "shape ranges are not ordered");
    if (ranges.tail_ratio[0] < 0.7 || ranges.tail_ratio[1] > 1.3)
        throw Error(ErrorCode::InvalidArgument, "tail ratio range must lie in [0.7, 1.3]");
    if (ranges.intensity[0] < 180 || ranges.intensity[1] > 255)
        throw Error(ErrorCode::InvalidArgument, "intensity range must lie in [180, 255]");
}

ImageRgb render_background(const SceneSpec& spec) {
    ImageRgb bg(spec.width, spec.height, static_cast<std::uint8_t>(spec.background_level));
    if (spec.texture_amplitude > 0) {
        Rng tex(spec.texture_seed);
        for (std::uint8_t& v : bg.data())
            v = static_cast<std::uint8_t>(spec.background_level +
                                          tex.uniform_int(0, spec.texture_amplitude));
    }
    return bg;
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    Rng noise(derive_seed(seed, 1));
    std::vector<RatShape> shapes;
    for (int i = 0; i < spec.rat_count; ++i) shapes.push_back(sample_shape(rng, spec.ranges, spec.scale()));
    const ImageRgb bg = render_background(spec);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::optional<Layout> lay = build_layout(spec, shapes, sample_placements(rng, spec, shapes));
        if (!lay) continue;
        Layout copy = *lay;
        Rng trial_noise = noise;
        Scene s = compose(spec, bg, std::move(copy), trial_noise);
        if (!visible_enough(s, *lay)) continue;
        return s;
    }
    throw Error(ErrorCode::PlacementFailure, "could not place rats after 1000 attempts");
}

Sequence generate_sequence(const SceneSpec& spec, int n_frames, std::uint64_t seed) {
    if (n_frames < 1) throw Error(ErrorCode::InvalidArgument, "n_frames must be >= 1");
    spec.validate();
    Sequence seq;
    seq.background = render_background(spec);
    if (n_frames == 1) {
        Scene s = generate_scene(spec, seed);
        seq.frames.push_back(std::move(s.frame));
        seq.truths.push_back(std::move(s.truths));
        return seq;
    }

    constexpr int kKeyEvery = 8;
    for (int restart = 0; restart < 20; ++restart) {
        Rng rng(derive_seed(seed, 100 + static_cast<std::uint64_t>(restart)));
        Rng noise(derive_seed(seed, 200 + static_cast<std::uint64_t>(restart)));
        std::vector<RatShape> shapes;
        for (int i = 0; i < spec.rat_count; ++i)
            shapes.push_back(sample_shape(rng, spec.ranges, spec.scale()));

        auto valid_key = [&]() -> std::optional<std::vector<RatPlacement>> {
            for (int a = 0; a < 1000; ++a) {
                auto pl = sample_placements(rng, spec, shapes);
                if (build_layout(spec, shapes, pl)) return pl;
            }
            return std::nullopt;
        };
        auto key = valid_key();
        if (!key) throw Error(ErrorCode::PlacementFailure, "could not place rats after 1000 attempts");

        seq.frames.clear();
        seq.truths.clear();
        bool ok = true;
        int frame = 0;
        while (ok && frame < n_frames) {
            // Walk to the next keyframe; resample it if any in-between frame
            // breaks the scene constraints.
            bool placed = false;
            for (int tries = 0; tries < 200 && !placed; ++tries) {
                auto next = valid_key();
                if (!next) break;
                std::vector<Layout> segment;
                for (int k = 0; k < kKeyEvery && frame + k < n_frames; ++k) {
                    const double t = static_cast<double>(k) / kKeyEvery;
                    std::vector<RatPlacement> pl(shapes.size());
                    for (std::size_t i = 0; i < shapes.size(); ++i) {
                        const RatPlacement& a = (*key)[i];
                        const RatPlacement& b = (*next)[i];
                        pl[i].center = {a.center.x + t * (b.center.x - a.center.x),
                                        a.center.y + t * (b.center.y - a.center.y)};
                        pl[i].heading = lerp_angle(a.heading, b.heading, t);
                        pl[i].bend = a.bend + t * (b.bend - a.bend);
                        pl[i].tail_bend = a.tail_bend + t * (b.tail_bend - a.tail_bend);
                    }
                    auto lay = build_layout(spec, shapes, pl);
                    if (!lay) break;
                    segment.push_back(std::move(*lay));
                }
                const int want = std::min(kKeyEvery, n_frames - frame);
                if (static_cast<int>(segment.size()) != want) continue;
                for (Layout& lay : segment) {
                    Scene s = compose(spec, seq.background, std::move(lay), noise);
                    seq.frames.push_back(std::move(s.frame));
                    seq.truths.push_back(std::move(s.truths));
                }
                frame += want;
                key = next;
                placed = true;
            }
            if (!placed) ok = false;
        }
        if (!ok) continue;
        if (n_frames < 3) return seq;
        const std::vector<int> cover = coverage_counts(seq);
        if (std::all_of(cover.begin(), cover.end(), [&](int c) { return 2 * c < n_frames; }))
            return seq;
    }
    throw Error(ErrorCode::PlacementFailure, "could not generate a sequence meeting the coverage bound");
}

std::vector<int> coverage_counts(const Sequence& seq) {
    if (seq.frames.empty()) return {};
    const int w = seq.frames[0].width();
    const int h = seq.frames[0].height();
    std::vector<int> cover(static_cast<std::size_t>(w) * h, 0);
    std::vector<std::uint8_t> hit(cover.size());
    for (const auto& truths : seq.truths) {
        std::fill(hit.begin(), hit.end(), 0);
        for (const GroundTruth& gt : truths)
            for (std::size_t i = 0; i < gt.mask.size(); ++i) hit[i] |= gt.mask[i];
        for (std::size_t i = 0; i < cover.size(); ++i) cover[i] += hit[i];
    }
    return cover;
}

InstanceAnnotation to_instance(const GroundTruth& gt) {
    InstanceAnnotation a;
    a.mask = gt.mask;
    a.bbox = gt.bbox;
    a.keypoints = gt.keypoints;
    a.parts = gt.parts;
    a.source = Source::Synthetic;
    return a;
}

}  // namespace ratseg
