#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ratseg/background.hpp"
#include "ratseg/geometry.hpp"
#include "ratseg/synthgen.hpp"

using namespace ratseg;

namespace {

void check_truth(const GroundTruth& gt) {
    for (std::size_t i = 0; i < gt.mask.size(); ++i) {
        CHECK((gt.parts[i] != 0) == (gt.mask[i] != 0));
        CHECK(gt.parts[i] >= 0);
        CHECK(gt.parts[i] <= 3);
    }
    if (area(gt.mask)) CHECK(gt.bbox == bounding_box(gt.mask));
}

}  // namespace

TEST_CASE("render_rat: straight pose is mirror symmetric") {
    const RatPose p = make_pose(RatShape{}, {{320, 210}, 0.0, 0.0, 0.0});
    const RenderedRat r = render_rat(p, 640, 420);
    BinaryMask mirror(640, 420, 0);
    for (int y = 0; y < 420; ++y)
        for (int x = 0; x < 640; ++x)
            if (r.truth.mask(x, y) && 420 - y >= 0 && 420 - y < 420) mirror(x, 420 - y) = 1;
    const std::size_t diff = area(mask_and_not(mirror, r.truth.mask)) + area(mask_and_not(r.truth.mask, mirror));
    CHECK(static_cast<double>(diff) <= polygon_perimeter(trace_boundary(r.truth.mask)));
}

TEST_CASE("render_rat: parts tile the mask, keypoints on the mask") {
    Rng rng(31);
    for (int t = 0; t < 10; ++t) {
        const RatShape s = sample_shape(rng, ShapeRanges{}, 1.0);
        const RatPose p = make_pose(s, {{320, 210}, rng.uniform(-3, 3), rng.uniform(-0.15, 0.15), rng.uniform(-0.6, 0.6)});
        const RenderedRat r = render_rat(p, 640, 420);
        check_truth(r.truth);
        for (std::size_t k = 0; k < 3; ++k) {
            const Keypoint& kp = r.truth.keypoints[k];
            CHECK(kp.visibility == 2);
            CHECK(r.truth.mask(static_cast<int>(std::lround(kp.x)), static_cast<int>(std::lround(kp.y))));
        }
    }
}

namespace {

double tail_geodesic(const GroundTruth& gt) {
    const BinaryMask tail = largest_component(mask_from_label(gt.parts, 3));
    const MedialAxis ma = medial_axis(tail);
    return longest_endpoint_geodesic(build_skeleton_graph(ma.skeleton, ma.dist)).length.value();
}

// Length of the curve under the 8-neighbour step metric.
double octile_length(const std::array<Point2, 3>& c) {
    double len = 0.0;
    Point2 p = bezier_point(c, 0.0);
    for (int i = 1; i <= 4000; ++i) {
        const Point2 q = bezier_point(c, i / 4000.0);
        const double dx = std::abs(q.x - p.x), dy = std::abs(q.y - p.y);
        len += std::max(dx, dy) + (std::numbers::sqrt2 - 1.0) * std::min(dx, dy);
        p = q;
    }
    return len;
}

}  // namespace

TEST_CASE("render_rat: axis-aligned tail geodesic matches tail_length within 5%") {
    Rng rng(32);
    for (int t = 0; t < 8; ++t) {
        const RatShape s = sample_shape(rng, ShapeRanges{}, 1.0);
        const RatPose p = make_pose(s, {{320, 210}, t * std::numbers::pi / 2, 0.0, 0.0});
        CHECK(tail_geodesic(render_rat(p, 640, 420).truth) == doctest::Approx(p.tail_length).epsilon(0.05));
    }
}

TEST_CASE("generate_scene: tail geodesic matches the curve's step-metric length") {
    SceneSpec spec;
    spec.rat_count = 1;
    spec.noise_sigma = 0.0;
    int within = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Scene sc = generate_scene(spec, s);
        const double ratio = tail_geodesic(sc.truths[0]) / octile_length(sc.poses[0].tail);
        within += std::abs(ratio - 1.0) <= 0.05;
    }
    CHECK(within >= 95);
}

TEST_CASE("validate_pose rejects bad poses") {
    RatPose p = make_pose(RatShape{}, {{320, 210}, 0.0, 0.0, 0.0});
    p.tail_length = p.body_length * 2;
    try {
        validate_pose(p);
        FAIL("expected PoseInvalid");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PoseInvalid);
    }
    RatPose q = make_pose(RatShape{}, {{320, 210}, 0.0, 0.0, 0.0});
    q.head_radius = q.max_body_halfwidth * 2;
    CHECK_THROWS_AS(validate_pose(q), Error);
}

TEST_CASE("generate_scene: determinism and schema") {
    SceneSpec spec;
    const Scene a = generate_scene(spec, 77);
    const Scene b = generate_scene(spec, 77);
    CHECK(a.frame == b.frame);
    REQUIRE(a.truths.size() == b.truths.size());
    for (std::size_t i = 0; i < a.truths.size(); ++i) {
        CHECK(a.truths[i].mask == b.truths[i].mask);
        CHECK(a.truths[i].parts == b.truths[i].parts);
        CHECK(a.truths[i].keypoints == b.truths[i].keypoints);
        check_truth(a.truths[i]);
    }
    CHECK(generate_scene(spec, 78).frame != a.frame);
}

TEST_CASE("generate_scene: occlusion modes over 500 seeds") {
    SceneSpec none;
    none.noise_sigma = 0.0;
    SceneSpec mount = none;
    mount.occlusion = OcclusionMode::Mounting;
    int single_blob = 0;
    for (std::uint64_t s = 0; s < 500; ++s) {
        const Scene a = generate_scene(none, s);
        const BinaryMask ua = mask_or(a.truths[0].mask, a.truths[1].mask);
        CHECK(label_count(connected_components(ua)) == none.rat_count);
        // Pairwise mask distance of at least 10 px.
        CHECK(area(mask_and(dilate(a.truths[0].mask, 9), a.truths[1].mask)) == 0);

        const Scene b = generate_scene(mount, s);
        const BinaryMask ub = mask_or(b.truths[0].mask, b.truths[1].mask);
        single_blob += label_count(connected_components(ub)) == 1;
    }
    CHECK(single_blob >= 475);
}

TEST_CASE("generate_scene: partial occlusion overlap bound") {
    SceneSpec spec;
    spec.occlusion = OcclusionMode::Partial;
    spec.noise_sigma = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Scene sc = generate_scene(spec, s);
        const RenderedRat a = render_rat(sc.poses[0], spec.width, spec.height);
        const RenderedRat b = render_rat(sc.poses[1], spec.width, spec.height);
        const double inter = static_cast<double>(area(mask_and(a.silhouette, b.silhouette)));
        const double smaller = static_cast<double>(std::min(area(a.silhouette), area(b.silhouette)));
        CHECK(inter <= 0.30 * smaller);
        const BoundingBox ba = bounding_box(a.silhouette), bb = bounding_box(b.silhouette);
        CHECK(std::min(ba.x + ba.w, bb.x + bb.w) > std::max(ba.x, bb.x));
        CHECK(std::min(ba.y + ba.h, bb.y + bb.h) > std::max(ba.y, bb.y));
    }
}

TEST_CASE("generate_sequence: n = 1 matches generate_scene") {
    SceneSpec spec;
    const Sequence seq = generate_sequence(spec, 1, 5);
    const Scene sc = generate_scene(spec, 5);
    REQUIRE(seq.frames.size() == 1);
    CHECK(seq.frames[0] == sc.frame);
    CHECK(seq.truths[0].size() == sc.truths.size());
    CHECK(seq.background == render_background(spec));
}

TEST_CASE("generate_sequence: coverage below half, determinism") {
    SceneSpec spec;
    spec.width = 320;
    spec.height = 210;
    const Sequence a = generate_sequence(spec, 21, 9);
    const auto cover = coverage_counts(a);
    for (int c : cover) CHECK(2 * c < 21);
    const Sequence b = generate_sequence(spec, 21, 9);
    CHECK(a.frames == b.frames);
}
