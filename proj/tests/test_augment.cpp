#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ratseg/augment.hpp"
#include "ratseg/background.hpp"
#include "ratseg/synthgen.hpp"

using namespace ratseg;

namespace {

struct Fixture {
    SceneSpec spec;
    Scene scene;
    BackgroundModel bg;
    std::vector<InstanceAnnotation> anns;
};

Fixture two_rats(std::uint64_t seed) {
    Fixture f;
    f.scene = generate_scene(f.spec, seed);
    f.bg = {render_background(f.spec), 1};
    for (const GroundTruth& gt : f.scene.truths) f.anns.push_back(to_instance(gt));
    return f;
}

Segment segment_of(const Fixture& f, std::size_t i) {
    const InstanceAnnotation& a = f.anns[i];
    return {f.scene.frame, a.mask, a.parts, a.keypoints};
}

std::vector<Point2> random_points(Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<Point2> p;
    for (std::size_t i = 0; i < n; ++i) p.push_back({rng.uniform(lo, hi), rng.uniform(lo, hi)});
    return p;
}

BinaryMask rect(int w, int h, int x0, int y0, int rw, int rh) {
    BinaryMask m(w, h, 0);
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) m(x, y) = 1;
    return m;
}

ImageRgb gradient_image(int w, int h) {
    ImageRgb img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = static_cast<std::uint8_t>((3 * x + y) % 256);
            img.at(x, y, 1) = static_cast<std::uint8_t>((x + 5 * y) % 256);
            img.at(x, y, 2) = static_cast<std::uint8_t>((7 * x * y) % 256);
        }
    return img;
}

bool same_outside(const ImageRgb& a, const ImageRgb& b, const BinaryMask& allowed) {
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            if (!allowed(x, y))
                for (int c = 0; c < 3; ++c)
                    if (a.at(x, y, c) != b.at(x, y, c)) return false;
    return true;
}

}  // namespace

TEST_CASE("augment config") {
    AugmentConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.seam_band() == 0.0);
    c.smoothing = Smoothing::Gaussian;
    CHECK(c.seam_band() == doctest::Approx(9.0));
    c.smoothing = Smoothing::MedianPyramid;
    CHECK(c.seam_band() == doctest::Approx(8.0));
    c.scale_range = {1.2, 1.1};
    CHECK_THROWS_AS(c.validate(), Error);
    AugmentConfig d;
    d.tps_max_shift = -1;
    CHECK_THROWS_AS(d.validate(), Error);
}

TEST_CASE("cut_and_inpaint") {
    const Fixture f = two_rats(1);
    const BinaryMask none(f.spec.width, f.spec.height, 0);
    CHECK(cut_and_inpaint(f.scene.frame, none, f.bg) == f.scene.frame);

    const ImageRgb cut = cut_and_inpaint(f.scene.frame, f.anns[0].mask, f.bg);
    const BinaryMask region = oracle::dilate(f.anns[0].mask, 2);
    const GrayImage residual = extract_foreground(cut, f.bg);
    for (std::size_t i = 0; i < region.size(); ++i)
        if (region[i]) CHECK(residual[i] == 0);
    CHECK(same_outside(cut, f.scene.frame, region));

    CHECK_THROWS_AS(cut_and_inpaint(f.scene.frame, BinaryMask(10, 10, 0), f.bg), Error);
}

TEST_CASE("rigid_transform_patch: identity, scaling, lattice rotation") {
    const Fixture f = two_rats(2);
    const Segment seg = segment_of(f, 0);
    const Segment id = rigid_transform_patch(seg, 0.0, 1.0);
    CHECK(id.mask == seg.mask);
    CHECK(id.image == seg.image);
    CHECK(id.parts == seg.parts);
    CHECK(id.keypoints == seg.keypoints);

    const Segment big = rigid_transform_patch(seg, 17.0, 1.1);
    CHECK(static_cast<double>(area(big.mask)) == doctest::Approx(1.21 * static_cast<double>(area(seg.mask))).epsilon(0.04));

    // 20x10 rectangle; the centroid sits on a half-integer, so a quarter turn
    // maps pixel centres onto pixel centres.
    Segment r{gradient_image(60, 60), rect(60, 60, 20, 25, 20, 10), LabelMap(), {}};
    const Segment q = rigid_transform_patch(r, 90.0, 1.0);
    const double cx = 29.5, cy = 29.5;
    BinaryMask expect(60, 60, 0);
    for (int y = 0; y < 60; ++y)
        for (int x = 0; x < 60; ++x)
            if (r.mask(x, y)) {
                const double dx = x - cx, dy = y - cy;
                expect(static_cast<int>(std::lround(cx - dy)), static_cast<int>(std::lround(cy + dx))) = 1;
            }
    CHECK(q.mask == expect);
}

TEST_CASE("rigid_transform_patch maps keypoints by the same affine map") {
    const Fixture f = two_rats(3);
    const Segment seg = segment_of(f, 1);
    const Segment out = rigid_transform_patch(seg, -30.0, 0.95);
    for (std::size_t k = 0; k < 3; ++k) {
        const Keypoint& p = out.keypoints[k];
        const int x = static_cast<int>(std::lround(p.x)), y = static_cast<int>(std::lround(p.y));
        // The transformed keypoint stays on (or next to) the transformed mask.
        bool near = false;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                near = near || (out.mask.contains(x + dx, y + dy) && out.mask(x + dx, y + dy));
        CHECK(near);
    }
}

TEST_CASE("tps_fit: identity and affine fields") {
    Rng rng(50);
    const auto src = random_points(rng, 9, 0, 200);
    const TpsWarp id = tps_fit(src, src);
    CHECK(id.affine[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::abs(id.affine[0]) <= 1e-9);
    CHECK(std::abs(id.affine[1] - 1.0) <= 1e-9);
    CHECK(std::abs(id.affine[2]) <= 1e-9);
    CHECK(std::abs(id.affine[3]) <= 1e-9);
    CHECK(std::abs(id.affine[4]) <= 1e-9);
    CHECK(std::abs(id.affine[5] - 1.0) <= 1e-9);
    for (std::size_t i = 0; i < src.size(); ++i) {
        CHECK(std::abs(id.weights_x[i]) <= 1e-9);
        CHECK(std::abs(id.weights_y[i]) <= 1e-9);
    }

    for (int t = 0; t < 20; ++t) {
        const auto s = random_points(rng, 10, 0, 300);
        const double a[6] = {rng.uniform(-20, 20), rng.uniform(0.8, 1.2), rng.uniform(-0.3, 0.3),
                             rng.uniform(-20, 20), rng.uniform(-0.3, 0.3), rng.uniform(0.8, 1.2)};
        auto map = [&](Point2 p) { return Point2{a[0] + a[1] * p.x + a[2] * p.y, a[3] + a[4] * p.x + a[5] * p.y}; };
        std::vector<Point2> d;
        for (const Point2& p : s) d.push_back(map(p));
        const TpsWarp w = tps_fit(s, d);
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(std::abs(w.weights_x[i]) <= 1e-6);
            CHECK(std::abs(w.weights_y[i]) <= 1e-6);
        }
        for (int k = 0; k < 100; ++k) {
            const Point2 p{rng.uniform(0, 300), rng.uniform(0, 300)};
            const Point2 got = w(p), want = map(p);
            CHECK(std::hypot(got.x - want.x, got.y - want.y) <= 1e-5);
        }
    }
}

TEST_CASE("tps_fit: interpolation, side conditions, bending energy") {
    Rng rng(51);
    for (int t = 0; t < 200; ++t) {
        const auto src = random_points(rng, 8, 0, 400);
        std::vector<Point2> dst;
        for (const Point2& p : src) {
            const double r = 10.0 * std::sqrt(rng.uniform()), phi = 2 * std::numbers::pi * rng.uniform();
            dst.push_back({p.x + r * std::cos(phi), p.y + r * std::sin(phi)});
        }
        const TpsWarp w = tps_fit(src, dst);
        for (std::size_t i = 0; i < src.size(); ++i) {
            const Point2 q = w(src[i]);
            CHECK(std::hypot(q.x - dst[i].x, q.y - dst[i].y) <= 1e-6);
        }
        for (const auto* wt : {&w.weights_x, &w.weights_y}) {
            double s0 = 0, sx = 0, sy = 0;
            for (std::size_t i = 0; i < src.size(); ++i) {
                s0 += (*wt)[i];
                sx += (*wt)[i] * src[i].x;
                sy += (*wt)[i] * src[i].y;
            }
            CHECK(std::abs(s0) <= 1e-8);
            CHECK(std::abs(sx) <= 1e-8);
            CHECK(std::abs(sy) <= 1e-8);
        }
        const double e = oracle::bending_energy(w);
        CHECK(w.bending_energy() == doctest::Approx(e).epsilon(1e-9));
        CHECK(e >= -1e-9);
    }
}

TEST_CASE("tps_fit errors") {
    const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    const std::vector<Point2> dup{{0, 0}, {5, 0}, {0, 5}, {5, 0}};
    const std::vector<Point2> two{{0, 0}, {1, 0}};
    for (const auto* pts : {&line, &dup, &two}) {
        try {
            tps_fit(*pts, *pts);
            FAIL("expected SingularSystem");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SingularSystem);
        }
    }
    const std::vector<Point2> three{{0, 0}, {5, 0}, {0, 5}};
    CHECK_THROWS_AS(tps_fit(three, two), Error);
}

TEST_CASE("tps_apply: identity and constructed warp") {
    const Fixture f = two_rats(4);
    const Segment seg = segment_of(f, 0);
    const Segment id = tps_apply(keypoint_warp(seg, {}, 22.0), seg);
    CHECK(id.mask == seg.mask);
    CHECK(id.parts == seg.parts);
    CHECK(id.image == seg.image);

    const BoundingBox bb = bounding_box(seg.mask);
    Rng rng(52);
    for (int t = 0; t < 10; ++t) {
        std::array<Point2, 3> shift;
        for (Point2& s : shift) s = {rng.uniform(-7, 7), rng.uniform(-7, 7)};
        const TpsWarp warp = keypoint_warp(seg, shift, 22.0);
        REQUIRE(warp.source.size() == 7);
        CHECK(warp.source[0] == Point2{bb.x - 22, bb.y - 22});
        CHECK(warp.source[3] == Point2{bb.x + bb.w + 21, bb.y + bb.h + 21});
        const Segment out = tps_apply(warp, seg);
        for (std::size_t k = 0; k < 3; ++k) {
            const double tx = seg.keypoints[k].x + shift[k].x, ty = seg.keypoints[k].y + shift[k].y;
            CHECK(std::hypot(out.keypoints[k].x - tx, out.keypoints[k].y - ty) <= 0.5);
        }
        for (std::size_t c = 0; c < 4; ++c) {
            const Point2 q = warp(warp.source[c]);
            CHECK(std::hypot(q.x - warp.source[c].x, q.y - warp.source[c].y) <= 1e-6);
        }
        // Only the corners are pinned, so the box edges may bulge a little.
        std::size_t leaked = 0;
        for (int y = 0; y < out.mask.height(); ++y)
            for (int x = 0; x < out.mask.width(); ++x)
                if (x < bb.x - 22 || y < bb.y - 22 || x > bb.x + bb.w + 21 || y > bb.y + bb.h + 21)
                    leaked += out.mask(x, y) != seg.mask(x, y);
        CHECK(static_cast<double>(leaked) <= 0.03 * static_cast<double>(area(seg.mask)));
        for (std::size_t i = 0; i < out.mask.size(); ++i) CHECK((out.parts[i] != 0) == (out.mask[i] != 0));
    }
}

TEST_CASE("tps_apply: area change within 20% over 100 synthetic rats") {
    SceneSpec spec;
    spec.rat_count = 1;
    spec.noise_sigma = 0.0;
    AugmentConfig cfg;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Scene sc = generate_scene(spec, s);
        const InstanceAnnotation a = to_instance(sc.truths[0]);
        const Segment seg{sc.frame, a.mask, a.parts, a.keypoints};
        Rng rng(derive_seed(700, s));
        AugmentDraw draw;
        draw_transform(rng, cfg, draw);
        const Segment out = tps_apply(keypoint_warp(seg, draw.keypoint_shift, 2 * cfg.tps_max_shift + 2), seg);
        const double a0 = static_cast<double>(area(seg.mask)), a1 = static_cast<double>(area(out.mask));
        CHECK(std::abs(a1 - a0) <= 0.2 * a0);
    }
}

TEST_CASE("paste_with_seam: modes and band") {
    const int W = 160, H = 120;
    const ImageRgb canvas = gradient_image(W, H);
    ImageRgb patch(W, H);
    for (std::uint8_t& v : patch.data()) v = 240;
    const BinaryMask mask = oracle::disc_mask(W, H, 60, 50, 22);
    const Pixel off{10, 5};
    BinaryMask placed(W, H, 0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (mask(x, y) && placed.contains(x + off.x, y + off.y)) placed(x + off.x, y + off.y) = 1;

    AugmentConfig cfg;
    const ImageRgb hard = paste_with_seam(canvas, patch, mask, off, cfg);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(hard.at(x, y, c) == (placed(x, y) ? 240 : canvas.at(x, y, c)));

    cfg.smoothing = Smoothing::Gaussian;
    const ImageRgb g = paste_with_seam(canvas, patch, mask, off, cfg);
    for (int c = 0; c < 3; ++c) CHECK(g.at(70, 55, c) == 240);
    CHECK(same_outside(g, canvas, oracle::dilate(placed, static_cast<int>(std::ceil(cfg.seam_band())))));
    CHECK(g != hard);

    cfg.smoothing = Smoothing::MedianPyramid;
    const ImageRgb m = paste_with_seam(canvas, patch, mask, off, cfg);
    CHECK(same_outside(m, canvas, oracle::dilate(placed, static_cast<int>(std::ceil(cfg.seam_band())))));
    CHECK(m != hard);

    try {
        paste_with_seam(canvas, patch, mask, {-75, 0}, cfg);
        FAIL("expected OutOfBounds");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfBounds);
    }
}

TEST_CASE("draw_transform: 10^4 draws stay in range") {
    AugmentConfig cfg;
    Rng rng(53);
    for (int i = 0; i < 10000; ++i) {
        AugmentDraw d;
        draw_transform(rng, cfg, d);
        CHECK(d.angle_deg >= cfg.rotation_range[0]);
        CHECK(d.angle_deg <= cfg.rotation_range[1]);
        CHECK(d.scale >= cfg.scale_range[0]);
        CHECK(d.scale <= cfg.scale_range[1]);
        for (const Point2& s : d.keypoint_shift) CHECK(std::hypot(s.x, s.y) <= cfg.tps_max_shift);
    }
}

TEST_CASE("synthesize_occlusion_sample: determinism, schema, errors") {
    const Fixture f = two_rats(5);
    AugmentConfig cfg;
    const AugmentSample a = synthesize_occlusion_sample(f.scene.frame, f.anns, f.bg, cfg, 99);
    const AugmentSample b = synthesize_occlusion_sample(f.scene.frame, f.anns, f.bg, cfg, 99);
    CHECK(a.image == b.image);
    REQUIRE(a.annotations.size() == b.annotations.size());
    for (std::size_t i = 0; i < a.annotations.size(); ++i) {
        CHECK(a.annotations[i].mask == b.annotations[i].mask);
        CHECK(a.annotations[i].parts == b.annotations[i].parts);
        CHECK(a.annotations[i].keypoints == b.annotations[i].keypoints);
    }
    CHECK(a.draw.offset == b.draw.offset);
    CHECK(a.draw.angle_deg == b.draw.angle_deg);

    for (const InstanceAnnotation& ann : a.annotations) {
        CHECK(a.image.same_shape(ann.mask));
        for (std::size_t i = 0; i < ann.mask.size(); ++i) CHECK((ann.parts[i] != 0) == (ann.mask[i] != 0));
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(ann.keypoints[k].visibility >= 0);
            CHECK(ann.keypoints[k].visibility <= 2);
        }
        CHECK(ann.bbox == bounding_box(ann.mask));
    }
    CHECK(a.annotations[static_cast<std::size_t>(a.draw.mover)].source == Source::Augmented);

    try {
        synthesize_occlusion_sample(f.scene.frame, {f.anns[0]}, f.bg, cfg, 1);
        FAIL("expected TooFewInstances");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooFewInstances);
    }
}

TEST_CASE("synthesize_occlusion_sample: disjoint masks match the composited foreground") {
    AugmentConfig cfg;
    const int threshold = AnnotationConfig{}.residual_threshold;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Fixture f = two_rats(100 + s);
        const AugmentSample out = synthesize_occlusion_sample(f.scene.frame, f.anns, f.bg, cfg, s);
        BinaryMask uni(f.spec.width, f.spec.height, 0);
        for (const InstanceAnnotation& a : out.annotations) {
            CHECK(area(mask_and(uni, a.mask)) == 0);
            uni = mask_or(uni, a.mask);
        }
        const BinaryMask fg = binarize(extract_foreground(out.image, f.bg), threshold);
        const std::size_t diff = area(mask_and_not(fg, uni)) + area(mask_and_not(uni, fg));
        CHECK(static_cast<double>(diff) <= 0.02 * static_cast<double>(area(uni)));
    }
}

TEST_CASE("synthesize_occlusion_sample: locality in all smoothing modes") {
    for (Smoothing mode : {Smoothing::None, Smoothing::Gaussian, Smoothing::MedianPyramid}) {
        AugmentConfig cfg;
        cfg.smoothing = mode;
        for (std::uint64_t s = 0; s < 5; ++s) {
            const Fixture f = two_rats(200 + s);
            const AugmentSample out = synthesize_occlusion_sample(f.scene.frame, f.anns, f.bg, cfg, s);
            const std::size_t mover = static_cast<std::size_t>(out.draw.mover);
            const BinaryMask& pasted = out.annotations[mover].mask;
            const BinaryMask allowed =
                mask_or(oracle::dilate(f.anns[mover].mask, 2),
                        oracle::dilate(pasted, static_cast<int>(std::ceil(cfg.seam_band()))));
            CHECK(same_outside(out.image, f.scene.frame, allowed));
        }
    }
}

TEST_CASE("synthesize_occlusion_sample: placement overlap over 300 draws") {
    const Fixture f = two_rats(6);
    AugmentConfig cfg;
    int failures = 0;
    for (std::uint64_t s = 0; s < 300; ++s) {
        AugmentSample out;
        try {
            out = synthesize_occlusion_sample(f.scene.frame, f.anns, f.bg, cfg, s);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::PlacementFailure);
            ++failures;
            continue;
        }
        const BoundingBox pb = out.annotations[static_cast<std::size_t>(out.draw.mover)].bbox;
        const BoundingBox tb = f.anns[static_cast<std::size_t>(out.draw.target)].bbox;
        const double iw = std::min(pb.x + pb.w, tb.x + tb.w) - std::max(pb.x, tb.x);
        const double ih = std::min(pb.y + pb.h, tb.y + tb.h) - std::max(pb.y, tb.y);
        const double frac = iw > 0 && ih > 0 ? iw * ih / std::min(pb.area(), tb.area()) : 0.0;
        CHECK(frac >= cfg.min_bbox_overlap);
    }
    CHECK(failures == 0);
}
