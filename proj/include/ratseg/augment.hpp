#pragma once

// Occlusion augmentation: cut one animal out, inpaint it with the background,
// deform it and paste it next to another animal.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ratseg/annotate.hpp"
#include "ratseg/background.hpp"
#include "ratseg/raster.hpp"
#include "ratseg/rng.hpp"

namespace ratseg {

enum class Smoothing { None, Gaussian, MedianPyramid };

const char* to_string(Smoothing s);

struct AugmentConfig {
    std::array<double, 2> rotation_range{-45.0, 45.0};  ///< degrees
    std::array<double, 2> scale_range{0.9, 1.1};
    double tps_max_shift = 10.0;  ///< px, per keypoint
    Smoothing smoothing = Smoothing::None;
    double gaussian_sigma = 3.0;
    int pyramid_levels = 3;
    double max_center_distance = 120.0;
    double min_bbox_overlap = 0.05;  ///< intersection over the smaller bbox area
    std::uint64_t seed = 0;

    /// Throws InvalidArgument.
    void validate() const;
    /// Width of the band around the pasted mask that the seam may touch.
    double seam_band() const;
};

/// Thin-plate spline R^2 -> R^2:
/// f(p) = a0 + a1 x + a2 y + sum_i w_i U(|p - s_i|), U(r) = r^2 log r.
struct TpsWarp {
    std::vector<Point2> source;
    std::vector<Point2> target;
    std::array<double, 6> affine{};  ///< x: a[0..2], y: a[3..5]
    std::vector<double> weights_x;
    std::vector<double> weights_y;

    Point2 operator()(Point2 p) const;
    /// sum over axes of w^T K w with K_ij = U(|s_i - s_j|).
    double bending_energy() const;
};

double tps_kernel(double r);

/// Throws SingularSystem for collinear or duplicated control points and
/// InvalidArgument when the point lists differ in size.
TpsWarp tps_fit(std::span<const Point2> src, std::span<const Point2> dst,
                double regularization = 0.0);

/// An animal cut out of a frame, in frame coordinates. Pixels of `image`
/// outside `mask` hold the background.
struct Segment {
    ImageRgb image;
    BinaryMask mask;
    LabelMap parts;
    Keypoints keypoints;
};

/// Pixels under a 2-px dilation of the mask take the background value.
/// Throws DimensionMismatch.
ImageRgb cut_and_inpaint(const ImageRgb& frame, const BinaryMask& instance_mask,
                         const BackgroundModel& bg);

/// Rotation by `angle_deg` about the mask centroid composed with uniform
/// scaling. Bilinear image, nearest mask and parts, exact keypoints. Only a
/// 16-px padded box around the mapped mask is resampled; the rest of the
/// image is copied.
Segment rigid_transform_patch(const Segment& seg, double angle_deg, double scale);

/// Backward-mapped resampling through the inverse spline fitted on swapped
/// control points over the same padded box; keypoints go forward through
/// `warp`.
Segment tps_apply(const TpsWarp& warp, const Segment& seg);

/// Control layout of the keypoint warp: the visible keypoints moved by
/// `shift`, plus the corners of the mask bbox grown by `margin`, held fixed.
/// The sample synthesis uses margin = 2 * tps_max_shift + 2, which keeps a
/// shifted nose or tail tip from folding against a pinned corner. Throws
/// EmptyMask, SingularSystem.
TpsWarp keypoint_warp(const Segment& seg, const std::array<Point2, 3>& shift, double margin);

/// Composites the masked pixels of `patch` translated by `offset`.
/// Throws OutOfBounds when less than half of the mask lands on the canvas.
ImageRgb paste_with_seam(const ImageRgb& canvas, const ImageRgb& patch, const BinaryMask& mask,
                         Pixel offset, const AugmentConfig& cfg);

/// Every random draw of one sample.
struct AugmentDraw {
    std::uint64_t seed = 0;
    int mover = 0;
    int target = 0;
    double angle_deg = 0.0;
    double scale = 1.0;
    std::array<Point2, 3> keypoint_shift{};
    Pixel offset;
    int placement_attempts = 0;
    Smoothing smoothing = Smoothing::None;
};

struct AugmentSample {
    ImageRgb image;
    std::vector<InstanceAnnotation> annotations;
    AugmentDraw draw;
};

/// Draws rotation, scale and keypoint shifts into `draw`.
void draw_transform(Rng& rng, const AugmentConfig& cfg, AugmentDraw& draw);

/// Throws TooFewInstances, PlacementFailure after 100 placement attempts.
AugmentSample synthesize_occlusion_sample(const ImageRgb& frame,
                                          const std::vector<InstanceAnnotation>& annotations,
                                          const BackgroundModel& bg, const AugmentConfig& cfg,
                                          std::uint64_t seed);

}  // namespace ratseg
