// Serial vs OpenMP kernel timings on synthetic frames. Each kernel's outputs
// are compared before timing; a mismatch aborts with exit code 1.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "ratseg/background.hpp"
#include "ratseg/kernels.hpp"
#include "ratseg/rng.hpp"
#include "ratseg/synthgen.hpp"

using namespace ratseg;
namespace k = ratseg::kernels;

namespace {

double best_of(int reps, const std::function<void()>& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
        best = std::min(best, dt.count());
    }
    return best;
}

template <class T>
bool same(const std::vector<T>& a, const std::vector<T>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

void row(const char* name, double serial_ms, double omp_ms) {
    std::printf("%-16s %10.2f %10.2f %8.2fx\n", name, serial_ms, omp_ms, serial_ms / omp_ms);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ratseg kernel benchmark"};
    int frames = 30;
    int reps = 5;
    int threads = 0;
    int radius = 3;
    app.add_option("--frames", frames, "Frames in the background stack");
    app.add_option("--reps", reps, "Repetitions (best time is reported)");
    app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)");
    app.add_option("--radius", radius, "Morphology disc radius");
    CLI11_PARSE(app, argc, argv);
    if (threads > 0) omp_set_num_threads(threads);

    SceneSpec spec;
    spec.texture_amplitude = 20;
    FrameSequence seq;
    std::vector<BinaryMask> masks;
    for (int i = 0; i < frames; ++i) {
        Scene s = generate_scene(spec, derive_seed(7, static_cast<std::uint64_t>(i)));
        seq.push_back(std::move(s.frame));
        BinaryMask m(spec.width, spec.height, 0);
        for (const GroundTruth& gt : s.truths) m = mask_or(m, gt.mask);
        masks.push_back(std::move(m));
    }
    const int w = spec.width;
    const int h = spec.height;
    const std::size_t px = static_cast<std::size_t>(w) * h;

    std::printf("frames %d, %dx%d, threads %d, best of %d\n", frames, w, h, omp_get_max_threads(), reps);
    std::printf("%-16s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");
    bool ok = true;

    {
        // One plane per channel, as the background estimator feeds it.
        std::vector<std::vector<std::uint8_t>> planes(seq.size(), std::vector<std::uint8_t>(3 * px));
        std::vector<const std::uint8_t*> ptr;
        for (std::size_t f = 0; f < seq.size(); ++f) {
            std::memcpy(planes[f].data(), seq[f].data().data(), 3 * px);
            ptr.push_back(planes[f].data());
        }
        std::vector<std::uint8_t> a(3 * px), b(3 * px);
        const double ts = best_of(reps, [&] { k::serial::temporal_mode(ptr, 3 * px, a.data()); });
        const double to = best_of(reps, [&] { k::omp::temporal_mode(ptr, 3 * px, b.data()); });
        ok &= same(a, b);
        row("temporal_mode", ts, to);
    }
    {
        std::vector<std::int32_t> a(px), b(px);
        const auto* p = seq[0].data().data();
        const auto* q = seq[1].data().data();
        const double ts = best_of(reps * 10, [&] { k::serial::abs_diff_sum3(p, q, px, a.data()); });
        const double to = best_of(reps * 10, [&] { k::omp::abs_diff_sum3(p, q, px, b.data()); });
        ok &= same(a, b);
        row("abs_diff_sum3", ts, to);
    }
    {
        std::vector<std::int64_t> a(px), b(px);
        const auto* m = masks[0].data().data();
        const double ts = best_of(reps * 10, [&] { k::serial::squared_edt(m, w, h, a.data()); });
        const double to = best_of(reps * 10, [&] { k::omp::squared_edt(m, w, h, b.data()); });
        ok &= same(a, b);
        row("squared_edt", ts, to);
    }
    {
        std::vector<std::uint8_t> a(px), b(px);
        const auto* m = masks[0].data().data();
        double ts = best_of(reps, [&] { k::serial::dilate_disc(m, w, h, radius, a.data()); });
        double to = best_of(reps, [&] { k::omp::dilate_disc(m, w, h, radius, b.data()); });
        ok &= same(a, b);
        row("dilate_disc", ts, to);
        ts = best_of(reps, [&] { k::serial::erode_disc(m, w, h, radius, a.data()); });
        to = best_of(reps, [&] { k::omp::erode_disc(m, w, h, radius, b.data()); });
        ok &= same(a, b);
        row("erode_disc", ts, to);
    }
    if (!ok) {
        std::fprintf(stderr, "serial and omp outputs differ\n");
        return 1;
    }
    return 0;
}
