#pragma once

// Parametric rat-like shapes with exact ground truth, rendered white on a dark
// background.

#include <array>
#include <cstdint>
#include <vector>

#include "ratseg/annotate.hpp"
#include "ratseg/raster.hpp"
#include "ratseg/rng.hpp"

namespace ratseg {

struct RatPose {
    std::array<Point2, 3> spine;  ///< quadratic Bezier, head center -> tail junction
    double body_length = 0.0;     ///< spine arc length
    double max_body_halfwidth = 0.0;
    double head_radius = 0.0;
    std::array<Point2, 3> tail;   ///< quadratic Bezier starting at the junction
    double tail_length = 0.0;
    double tail_base_halfwidth = 0.0;  ///< tapers to 1 at the tip
    int intensity = 255;
};

/// Point and unit tangent of a quadratic Bezier.
Point2 bezier_point(const std::array<Point2, 3>& c, double t);
Point2 bezier_tangent(const std::array<Point2, 3>& c, double t);
double bezier_length(const std::array<Point2, 3>& c);

/// Body halfwidth at spine parameter t in [0, 1].
double body_halfwidth(const RatPose& pose, double t);
/// Tail halfwidth at arc-length fraction u in [0, 1].
double tail_halfwidth(const RatPose& pose, double u);

/// Throws PoseInvalid when a pose invariant is violated.
void validate_pose(const RatPose& pose);

struct GroundTruth {
    BinaryMask mask;
    LabelMap parts;
    Keypoints keypoints;  ///< nose, spine/tail junction, tail tip
    BoundingBox bbox;
};

struct RenderedRat {
    GroundTruth truth;
    /// Full (unoccluded) silhouette; `truth.mask` starts equal to it.
    BinaryMask silhouette;
};

/// Ground truth as an annotation record (source synthetic).
InstanceAnnotation to_instance(const GroundTruth& gt);

RenderedRat render_rat(const RatPose& pose, int width, int height);

/// Identity-level shape parameters of one animal.
struct RatShape {
    double body_length = 115.0;
    double max_body_halfwidth = 19.0;
    double head_radius = 15.0;
    double tail_length = 95.0;
    double tail_base_halfwidth = 4.5;
    int intensity = 220;
};

/// Where and how the animal lies in one frame.
struct RatPlacement {
    Point2 center;
    double heading = 0.0;    ///< radians, direction from tail junction to head
    double bend = 0.0;       ///< spine control-point offset as a fraction of length
    double tail_bend = 0.0;  ///< radians turned over the tail
};

RatPose make_pose(const RatShape& shape, const RatPlacement& placement);

struct ShapeRanges {
    std::array<double, 2> body_length{90.0, 140.0};
    std::array<double, 2> max_body_halfwidth{16.0, 22.0};
    std::array<double, 2> head_radius{12.0, 18.0};
    std::array<double, 2> tail_ratio{0.9, 1.1};
    std::array<double, 2> tail_base_halfwidth{4.0, 5.0};
    std::array<int, 2> intensity{180, 255};
    std::array<double, 2> bend{-0.15, 0.15};
    std::array<double, 2> tail_bend{-0.6, 0.6};
};

RatShape sample_shape(Rng& rng, const ShapeRanges& ranges, double scale);

enum class OcclusionMode { None, Partial, Mounting };

const char* to_string(OcclusionMode m);

struct SceneSpec {
    int width = 640;
    int height = 420;
    int rat_count = 2;
    int background_level = 0;
    int texture_amplitude = 0;  ///< static per-pixel texture in [0, amplitude]
    std::uint64_t texture_seed = 1;
    OcclusionMode occlusion = OcclusionMode::None;
    double noise_sigma = 3.0;
    ShapeRanges ranges;

    /// Geometry scale relative to the 640x420 reference canvas.
    double scale() const;
    /// Throws InvalidArgument.
    void validate() const;
};

/// Noise-free static background.
ImageRgb render_background(const SceneSpec& spec);

struct Scene {
    ImageRgb frame;
    std::vector<GroundTruth> truths;  ///< visible masks, in rat order
    std::vector<RatPose> poses;
};

/// Throws PlacementFailure after 1000 attempts.
Scene generate_scene(const SceneSpec& spec, std::uint64_t seed);

struct Sequence {
    std::vector<ImageRgb> frames;
    std::vector<std::vector<GroundTruth>> truths;
    ImageRgb background;  ///< noise-free
};

/// Rats random-walk between keyframes; every pixel is rat-free in more than
/// half of the frames.
Sequence generate_sequence(const SceneSpec& spec, int n_frames, std::uint64_t seed);

/// Per-pixel count of frames in which some rat covers the pixel.
std::vector<int> coverage_counts(const Sequence& seq);

}  // namespace ratseg
