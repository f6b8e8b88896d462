#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ratseg/raster.hpp"
#include "ratseg/rle.hpp"

using namespace ratseg;

namespace {

BinaryMask block(int w, int h, int x0, int y0, int bw, int bh) {
    BinaryMask m(w, h, 0);
    for (int y = y0; y < y0 + bh; ++y)
        for (int x = x0; x < x0 + bw; ++x) m(x, y) = 1;
    return m;
}

}  // namespace

TEST_CASE("connected_components: empty mask") {
    const LabelMap l = connected_components(BinaryMask(4, 4, 0));
    CHECK(label_count(l) == 0);
    for (std::size_t i = 0; i < l.size(); ++i) CHECK(l[i] == 0);
}

TEST_CASE("connected_components: equal areas tie to the earlier region") {
    BinaryMask m = mask_or(block(8, 8, 5, 1, 2, 2), block(8, 8, 1, 5, 2, 2));
    const LabelMap l = connected_components(m);
    CHECK(label_count(l) == 2);
    CHECK(l(5, 1) == 1);
    CHECK(l(1, 5) == 2);
}

TEST_CASE("connected_components: flood-fill oracle, density 0.4") {
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        const BinaryMask m = oracle::random_mask(rng, 64, 64, 0.4);
        CHECK(connected_components(m, Connectivity::Eight) == oracle::components(m, Connectivity::Eight));
        CHECK(connected_components(m, Connectivity::Four) == oracle::components(m, Connectivity::Four));
    }
}

TEST_CASE("connected_components: partition property") {
    Rng rng(12);
    const BinaryMask m = oracle::random_mask(rng, 40, 30, 0.5);
    const LabelMap l = connected_components(m);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK((m[i] != 0) == (l[i] != 0));
    for (int k = 1; k <= label_count(l); ++k)
        CHECK(label_count(connected_components(mask_from_label(l, k))) == 1);
}

TEST_CASE("fill_holes") {
    BinaryMask sq = block(9, 9, 2, 2, 5, 5);
    BinaryMask holed = sq;
    holed(4, 4) = 0;
    CHECK(fill_holes(holed) == sq);
    CHECK(fill_holes(sq) == sq);

    Rng rng(13);
    for (int t = 0; t < 20; ++t) {
        BinaryMask m = oracle::random_blob(rng, 40, 40, 4);
        for (int k = 0; k < 10; ++k) m(static_cast<int>(rng.uniform_int(0, 39)), static_cast<int>(rng.uniform_int(0, 39))) = 0;
        CHECK(fill_holes(m) == oracle::fill_holes(m));
        CHECK(fill_holes(fill_holes(m)) == fill_holes(m));
    }
}

TEST_CASE("morphology matches naive disc oracle") {
    Rng rng(14);
    for (int t = 0; t < 10; ++t) {
        const BinaryMask m = oracle::random_mask(rng, 48, 48, 0.3 + 0.05 * t);
        for (int r : {0, 1, 2, 3}) {
            CHECK(dilate(m, r) == oracle::dilate(m, r));
            CHECK(erode(m, r) == oracle::erode(m, r));
        }
        CHECK(morphological_closing(m, 3) == oracle::erode(oracle::dilate(m, 3), 3));
    }
}

TEST_CASE("closing: identity, gap bridging, extensive, monotone, idempotent") {
    Rng rng(15);
    const BinaryMask m = oracle::random_mask(rng, 30, 30, 0.4);
    CHECK(morphological_closing(m, 0) == m);

    const BinaryMask two = mask_or(block(20, 10, 2, 2, 5, 5), block(20, 10, 9, 2, 5, 5));
    CHECK(label_count(connected_components(two)) == 2);
    CHECK(label_count(connected_components(morphological_closing(two, 2))) == 1);

    for (int t = 0; t < 10; ++t) {
        const BinaryMask a = oracle::random_blob(rng, 40, 40, 5);
        const BinaryMask b = mask_or(a, oracle::random_blob(rng, 40, 40, 2));
        const BinaryMask ca = morphological_closing(a, 2);
        CHECK(mask_and_not(a, ca) == BinaryMask(40, 40, 0));
        CHECK(mask_and_not(ca, morphological_closing(b, 2)) == BinaryMask(40, 40, 0));
        CHECK(morphological_closing(ca, 2) == ca);
    }
}

TEST_CASE("remove_small_components") {
    Rng rng(16);
    const BinaryMask m = oracle::random_mask(rng, 40, 40, 0.45);
    CHECK(remove_small_components(m, 0) == m);

    BinaryMask f(20, 20, 0);
    f(1, 1) = f(2, 1) = f(3, 1) = 1;
    const BinaryMask big = block(20, 20, 5, 5, 10, 5);
    f = mask_or(f, big);
    CHECK(remove_small_components(f, 10) == big);

    for (std::size_t a : {2u, 5u, 20u}) {
        CHECK(remove_small_components(m, a) == oracle::remove_small(m, a));
        CHECK(remove_small_components(remove_small_components(m, a), a) == remove_small_components(m, a));
    }
}

TEST_CASE("solidity") {
    CHECK(solidity(block(20, 20, 3, 3, 10, 10)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(solidity(BinaryMask(5, 5, 0)), Error);

    double prev = 0.0;
    for (int n : {10, 20, 40}) {
        BinaryMask l = block(2 * n + 2, 2 * n + 2, 0, 0, 2 * n, n);
        l = mask_or(l, block(2 * n + 2, 2 * n + 2, 0, n, n, n));
        const double s = solidity(l);
        CHECK(std::abs(s - 6.0 / 7.0) <= std::abs(prev - 6.0 / 7.0) + 1e-12);
        prev = s;
    }
    // Hull of three quadrants is 3.5 n^2, so the ratio tends to 6/7.
    CHECK(prev == doctest::Approx(6.0 / 7.0).epsilon(0.01));

    Rng rng(17);
    for (int t = 0; t < 20; ++t) {
        const BinaryMask m = oracle::random_blob(rng, 30, 30, 3);
        std::vector<Pixel> pts;
        for (int y = 0; y < 30; ++y)
            for (int x = 0; x < 30; ++x)
                if (m(x, y)) pts.push_back({x, y});
        const double expect = static_cast<double>(pts.size()) / static_cast<double>(oracle::hull_lattice_count(pts));
        CHECK(solidity(m) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(solidity(m) <= 1.0);
    }
}

TEST_CASE("solidity of rasterized convex polygons") {
    Rng rng(18);
    int tested = 0;
    while (tested < 30) {
        Contour poly;
        const double cx = rng.uniform(30, 50), cy = rng.uniform(30, 50);
        const int k = static_cast<int>(rng.uniform_int(3, 8));
        std::vector<double> ang;
        for (int i = 0; i < k; ++i) ang.push_back(rng.uniform(0, 2 * std::numbers::pi));
        std::sort(ang.begin(), ang.end());
        const double r = rng.uniform(10, 28);
        for (double a : ang) poly.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
        if (std::abs(polygon_area(poly)) < 200) continue;
        const BinaryMask m = rasterize_polygon(poly, 80, 80);
        if (area(m) < 200) continue;
        CHECK(solidity(m) >= 0.99);
        ++tested;
    }
}

TEST_CASE("trace_boundary") {
    const Contour c = trace_boundary(block(5, 5, 1, 1, 3, 3));
    CHECK(c.size() == 8);
    CHECK(polygon_area(c) > 0);

    const BinaryMask disc = oracle::disc_mask(40, 40, 20, 20, 10);
    const Contour d = trace_boundary(disc);
    CHECK(polygon_perimeter(d) == doctest::Approx(2 * std::numbers::pi * 10).epsilon(0.10));

    // Round trip differs only on contour pixels.
    Rng rng(19);
    for (int t = 0; t < 10; ++t) {
        const BinaryMask m = largest_component(fill_holes(oracle::random_blob(rng, 40, 40, 3)));
        if (area(m) < 4) continue;
        const Contour b = trace_boundary(m);
        const BinaryMask back = rasterize_polygon(b, 40, 40);
        BinaryMask on(40, 40, 0);
        for (const Point2& p : b) on(static_cast<int>(p.x), static_cast<int>(p.y)) = 1;
        const BinaryMask diff = mask_or(mask_and_not(m, back), mask_and_not(back, m));
        CHECK(mask_and_not(diff, on) == BinaryMask(40, 40, 0));
    }

    CHECK_THROWS_AS(trace_boundary(BinaryMask(5, 5, 0)), Error);
    BinaryMask two = mask_or(block(12, 12, 0, 0, 3, 3), block(12, 12, 6, 6, 3, 3));
    try {
        trace_boundary(two);
        FAIL("expected MultipleComponents");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MultipleComponents);
    }
}

TEST_CASE("rasterize_polygon") {
    const Contour rect{{0.5, 0.5}, {4.5, 0.5}, {4.5, 2.5}, {0.5, 2.5}};
    const BinaryMask m = rasterize_polygon(rect, 8, 6);
    CHECK(m == block(8, 6, 1, 1, 4, 2));

    Contour rev(rect.rbegin(), rect.rend());
    CHECK(rasterize_polygon(rev, 8, 6) == m);

    const Contour tri{{3.2, 4.1}, {55.7, 10.3}, {20.4, 48.9}};
    const BinaryMask t = rasterize_polygon(tri, 64, 64);
    const double exact = std::abs(polygon_area(tri));
    CHECK(std::abs(static_cast<double>(area(t)) - exact) <= polygon_perimeter(tri));
    Contour trev(tri.rbegin(), tri.rend());
    CHECK(rasterize_polygon(trev, 64, 64) == t);

    CHECK_THROWS_AS(rasterize_polygon({{0, 0}, {0.5, 0}, {0, 0.5}}, 4, 4), Error);
}

TEST_CASE("bounding_box and crop/paste") {
    const BinaryMask m = block(10, 8, 2, 3, 4, 2);
    const BoundingBox b = bounding_box(m);
    CHECK(b == BoundingBox{2, 3, 4, 2});
    const BinaryMask c = crop(m, 2, 3, 4, 2);
    CHECK(area(c) == 8);
    BinaryMask back(10, 8, 0);
    paste(back, c, 2, 3);
    CHECK(back == m);
}

TEST_CASE("RLE round trip, row-major, leading zero run") {
    Rng rng(20);
    for (int t = 0; t < 20; ++t) {
        const BinaryMask m = oracle::random_mask(rng, 13, 7, 0.5);
        const Rle r = encode_rle(m);
        CHECK(decode_rle(r) == m);
        CHECK(oracle::decode(r) == m);
        CHECK(rle_area(r) == area(m));
        CHECK(rle_from_json(to_json(r)) == r);
    }
    BinaryMask one(3, 2, 0);
    one(0, 0) = 1;
    one(2, 0) = 1;
    const Rle r = encode_rle(one);
    CHECK(r.counts == std::vector<std::uint32_t>{0, 1, 1, 1, 3});
    Rle bad = r;
    bad.counts.push_back(1);
    CHECK_THROWS_AS(decode_rle(bad), Error);
}
