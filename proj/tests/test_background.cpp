#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "ratseg/background.hpp"
#include "ratseg/kernels.hpp"

using namespace ratseg;

namespace {

ImageRgb random_image(Rng& rng, int w, int h, int levels) {
    ImageRgb im(w, h);
    for (auto& v : im.data()) v = static_cast<std::uint8_t>(rng.uniform_int(0, levels - 1));
    return im;
}

}  // namespace

TEST_CASE("estimate_background: constant and majority") {
    Rng rng(1);
    const ImageRgb f = random_image(rng, 6, 5, 256);
    const BackgroundModel bg = estimate_background({f, f, f, f});
    CHECK(bg.background == f);
    CHECK(bg.frame_count == 4);

    FrameSequence seq(3, ImageRgb(1, 1));
    seq[0].at(0, 0, 0) = 10;
    seq[1].at(0, 0, 0) = 10;
    seq[2].at(0, 0, 0) = 200;
    CHECK(estimate_background(seq).background.at(0, 0, 0) == 10);
}

TEST_CASE("estimate_background: histogram oracle, ties to smaller value") {
    Rng rng(2);
    for (int t = 0; t < 10; ++t) {
        FrameSequence seq;
        for (int i = 0; i < 31; ++i) seq.push_back(random_image(rng, 8, 8, 6));
        CHECK(estimate_background(seq).background == oracle::temporal_mode(seq));
    }
    FrameSequence tie(2, ImageRgb(1, 1));
    tie[0].at(0, 0, 1) = 90;
    tie[1].at(0, 0, 1) = 30;
    CHECK(estimate_background(tie).background.at(0, 0, 1) == 30);
}

TEST_CASE("estimate_background: permutation invariance and majority property") {
    Rng rng(3);
    FrameSequence seq;
    const ImageRgb base = random_image(rng, 10, 10, 256);
    for (int i = 0; i < 15; ++i) {
        ImageRgb f = base;
        // Fewer than half the frames disturb any byte.
        for (auto& v : f.data())
            if (rng.uniform() < 0.3) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        seq.push_back(f);
    }
    const ImageRgb a = estimate_background(seq).background;
    std::vector<ImageRgb> shuffled = seq;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[2], shuffled[9]);
    CHECK(estimate_background(shuffled).background == a);

    FrameSequence maj;
    for (int i = 0; i < 9; ++i) maj.push_back(i < 5 ? base : random_image(rng, 10, 10, 256));
    CHECK(estimate_background(maj).background == base);
}

TEST_CASE("estimate_background: errors") {
    try {
        estimate_background({});
        FAIL("expected EmptySequence");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySequence);
    }
    try {
        estimate_background({ImageRgb(2, 2), ImageRgb(3, 2)});
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
}

TEST_CASE("extract_foreground") {
    Rng rng(4);
    const ImageRgb b = random_image(rng, 12, 9, 256);
    const BackgroundModel bg{b, 1};
    const GrayImage zero = extract_foreground(b, bg);
    for (std::size_t i = 0; i < zero.size(); ++i) CHECK(zero[i] == 0);

    ImageRgb f(3, 3, 100);
    f.at(1, 1, 0) = 150;
    f.at(1, 1, 2) = 70;
    const GrayImage r = extract_foreground(f, {ImageRgb(3, 3, 100), 1});
    CHECK(r(1, 1) == 80);
    CHECK(r(0, 0) == 0);

    const ImageRgb g = random_image(rng, 12, 9, 256);
    const GrayImage res = extract_foreground(g, bg);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 12; ++x) {
            int s = 0;
            for (int c = 0; c < 3; ++c) s += std::abs(int(g.at(x, y, c)) - int(b.at(x, y, c)));
            CHECK(res(x, y) == s);
        }
    CHECK_THROWS_AS(extract_foreground(ImageRgb(2, 2), bg), Error);
}

TEST_CASE("binarize") {
    GrayImage zero(4, 4, 0);
    CHECK(area(binarize(zero, 0)) == 0);
    GrayImage r(2, 1, 0);
    r(1, 0) = 80;
    const BinaryMask m = binarize(r, 50);
    CHECK(m(0, 0) == 0);
    CHECK(m(1, 0) == 1);

    Rng rng(5);
    GrayImage g(20, 20, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<std::int32_t>(rng.uniform_int(0, 765));
    for (int t = 0; t < 700; t += 50) CHECK(mask_and_not(binarize(g, t + 50), binarize(g, t)) == BinaryMask(20, 20, 0));
}

TEST_CASE("serial and OpenMP kernels agree") {
    namespace k = ratseg::kernels;
    Rng rng(6);
    std::vector<std::vector<std::uint8_t>> planes(9, std::vector<std::uint8_t>(500));
    std::vector<const std::uint8_t*> ptr;
    for (auto& p : planes) {
        for (auto& v : p) v = static_cast<std::uint8_t>(rng.uniform_int(0, 7));
        ptr.push_back(p.data());
    }
    std::vector<std::uint8_t> a(500), b(500);
    k::serial::temporal_mode(ptr, 500, a.data());
    k::omp::temporal_mode(ptr, 500, b.data());
    CHECK(a == b);

    std::vector<std::int32_t> da(100), db(100);
    k::serial::abs_diff_sum3(planes[0].data(), planes[1].data(), 100, da.data());
    k::omp::abs_diff_sum3(planes[0].data(), planes[1].data(), 100, db.data());
    CHECK(da == db);

    const BinaryMask m = oracle::random_mask(rng, 31, 17, 0.7);
    std::vector<std::int64_t> ea(m.size()), eb(m.size());
    k::serial::squared_edt(m.data().data(), 31, 17, ea.data());
    k::omp::squared_edt(m.data().data(), 31, 17, eb.data());
    CHECK(ea == eb);

    std::vector<std::uint8_t> ma(m.size()), mb(m.size());
    k::serial::dilate_disc(m.data().data(), 31, 17, 2, ma.data());
    k::omp::dilate_disc(m.data().data(), 31, 17, 2, mb.data());
    CHECK(ma == mb);
    k::serial::erode_disc(m.data().data(), 31, 17, 2, ma.data());
    k::omp::erode_disc(m.data().data(), 31, 17, 2, mb.data());
    CHECK(ma == mb);
}
