#include "ratseg/background.hpp"

#include "ratseg/kernels.hpp"

namespace ratseg {

BackgroundModel estimate_background(const FrameSequence& frames) {
    if (frames.empty()) throw Error(ErrorCode::EmptySequence, "no frames");
    const int w = frames.front().width(), h = frames.front().height();
    std::vector<const std::uint8_t*> ptrs;
    ptrs.reserve(frames.size());
    for (const auto& f : frames) {
        if (!f.same_shape(w, h)) throw Error(ErrorCode::DimensionMismatch, "frame sizes differ");
        ptrs.push_back(f.data().data());
    }
    BackgroundModel model{ImageRgb(w, h), frames.size()};
    kernels::omp::temporal_mode(ptrs, static_cast<std::size_t>(w) * h * 3,
                                model.background.data().data());
    return model;
}

GrayImage extract_foreground(const ImageRgb& frame, const BackgroundModel& bg) {
    if (!frame.same_shape(bg.background))
        throw Error(ErrorCode::DimensionMismatch, "frame and background differ in size");
    GrayImage out(frame.width(), frame.height());
    kernels::omp::abs_diff_sum3(frame.data().data(), bg.background.data().data(), out.size(),
                                out.data().data());
    return out;
}

BinaryMask binarize(const GrayImage& residual, int threshold) {
    if (threshold < 0) throw Error(ErrorCode::InvalidArgument, "negative threshold");
    BinaryMask out(residual.width(), residual.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = residual[i] > threshold ? 1 : 0;
    return out;
}

}  // namespace ratseg
