#pragma once

#include <vector>

#include "ratseg/raster.hpp"

namespace ratseg {

/// Frames from a stationary camera, all with the same dimensions.
using FrameSequence = std::vector<ImageRgb>;

struct BackgroundModel {
    ImageRgb background;
    std::size_t frame_count = 0;
};

/// Per-pixel, per-channel temporal mode; ties go to the smaller intensity.
/// Throws EmptySequence or DimensionMismatch.
BackgroundModel estimate_background(const FrameSequence& frames);

/// Sum over channels of |frame - background|, in [0, 765].
GrayImage extract_foreground(const ImageRgb& frame, const BackgroundModel& bg);

/// Set where residual > threshold.
BinaryMask binarize(const GrayImage& residual, int threshold);

}  // namespace ratseg
