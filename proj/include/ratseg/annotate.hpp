#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ratseg/background.hpp"
#include "ratseg/geometry.hpp"
#include "ratseg/raster.hpp"

namespace ratseg {

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    int visibility = 0;  ///< 0 absent, 1 labeled but occluded, 2 labeled and visible
    bool operator==(const Keypoint&) const = default;
};

struct Keypoints {
    Keypoint head;
    Keypoint tail_base;
    Keypoint tail_end;

    static constexpr std::array<const char*, 3> names{"head", "tail_base", "tail_end"};
    Keypoint& operator[](std::size_t i) { return i == 0 ? head : (i == 1 ? tail_base : tail_end); }
    const Keypoint& operator[](std::size_t i) const {
        return i == 0 ? head : (i == 1 ? tail_base : tail_end);
    }
    bool operator==(const Keypoints&) const = default;
};

enum class PartLabel : std::int32_t { Head = 1, Body = 2, Tail = 3 };

enum class Source { CvPipeline, Synthetic, Augmented };

enum QualityFlag : unsigned {
    kSmoothed = 1u,
    kTrimmed = 2u,
    kCornerSnapped = 4u,
};

struct InstanceAnnotation {
    BinaryMask mask;
    BoundingBox bbox;
    Keypoints keypoints;
    LabelMap parts;  ///< PartLabel values, nonzero exactly on mask
    Source source = Source::CvPipeline;
    unsigned quality_flags = 0;
};

struct AnnotationConfig {
    bool snap_head_to_corner = false;
    bool clean_mask = true;
    bool trim_protruding = true;
    int closing_radius = 3;
    std::size_t min_component_area = 300;
    double solidity_min = 0.35;
    double solidity_max = 0.95;
    int spline_degree = 4;
    /// Residual sum of squares per boundary pixel; the target is this times the
    /// boundary length.
    double spline_smoothing_per_length = 0.5;
    /// Reject as degenerate when a skeleton branch leaves the midline for more
    /// than this fraction of the midline length.
    double max_side_branch_fraction = 0.1;
    double tail_ratio_min = 0.5;
    double tail_ratio_max = 1.6;
    int residual_threshold = 50;
    double corner_snap_radius = 15.0;
    int corner_k = 3;
    double corner_min_turn_deg = 45.0;
    /// Move head and tail-end keypoints from the skeleton ends out to the mask
    /// boundary along the midline direction.
    bool extend_endpoints_to_boundary = true;
    /// Off-skeleton step cost of the endpoint search; has no effect on
    /// skeleton-restricted paths and is kept for experimentation.
    double mcd_epsilon = 2.0;

    /// Throws InvalidArgument when bounds are not well ordered.
    void validate() const;
};

enum class RejectionReason {
    TooSmall,
    NonConvexityGate,
    TooFewEndpoints,
    TailRatioInvalid,
    DegenerateSkeleton,
};

const char* to_string(RejectionReason r);

/// Head-to-tail midline with the tail-base split.
struct Midline {
    std::vector<Pixel> nodes;  ///< ordered head end -> tail end
    std::size_t tail_base = 0;
};

BinaryMask smooth_boundary(const BinaryMask& mask, const AnnotationConfig& cfg);

using PreprocessResult = std::variant<BinaryMask, RejectionReason>;
PreprocessResult preprocess(const BinaryMask& raw_mask, const AnnotationConfig& cfg);

struct EndpointClasses {
    Pixel head;
    Pixel tail_end;
};

/// Two-marker watershed on the negated distance map; the larger basin is the
/// head, ties go to the larger radius.
EndpointClasses classify_endpoints(const DistanceMap& dist, const BinaryMask& mask, Pixel q,
                                   Pixel r);

/// Index of the best two-segment split of the radius profile at its median:
/// minimizes #{i < i*: v_i < m} + #{i >= i*: v_i > m}, ties to the smallest
/// index. Throws PathTooShort below 5 nodes.
std::size_t find_tail_base(std::span<const Pixel> path, const DistanceMap& dist);

/// Geodesic tail length over geodesic body length.
double tail_ratio(std::span<const Pixel> path, std::size_t tail_base_index);
bool validate_tail_ratio(std::span<const Pixel> path, std::size_t tail_base_index,
                         const AnnotationConfig& cfg);

/// Index of the path node nearest to each pixel (first on ties), -1 outside mask.
std::vector<int> nearest_path_node(const BinaryMask& mask, std::span<const Pixel> nodes);

/// Three-marker watershed split into head, body and tail; throws
/// KeypointOutsideMask.
LabelMap segment_parts(const BinaryMask& mask, const DistanceMap& dist, const Keypoints& kps,
                       const Midline& midline);

Point2 snap_keypoint_to_corner(Point2 kp, const Contour& contour, const AnnotationConfig& cfg);

/// Relabels head pixels projecting past the neck (first local minimum of the
/// smoothed radius profile after its first local maximum) to body.
LabelMap trim_head_segment(const LabelMap& parts, const Midline& midline, const DistanceMap& dist);

using InstanceResult = std::variant<InstanceAnnotation, RejectionReason>;
InstanceResult annotate_instance(const BinaryMask& raw_mask, const AnnotationConfig& cfg);

struct Rejection {
    BinaryMask mask;
    RejectionReason reason;
};

struct FrameAnnotations {
    std::vector<InstanceAnnotation> accepted;
    std::vector<Rejection> rejected;
};

/// Foreground extraction, component split, and per-component annotation in
/// component-label order.
FrameAnnotations annotate_frame(const ImageRgb& frame, const BackgroundModel& bg,
                                const AnnotationConfig& cfg);

/// Same, starting from a binary foreground mask.
FrameAnnotations annotate_foreground(const BinaryMask& foreground, const AnnotationConfig& cfg);

}  // namespace ratseg
