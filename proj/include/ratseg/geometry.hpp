#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "ratseg/raster.hpp"

namespace ratseg {

struct DistTag {};
/// Euclidean distance (pixels) from a set pixel to the nearest unset pixel,
/// 0 outside the mask. Pixels beyond the image border count as unset.
using DistanceMap = Raster<double, DistTag>;

/// Exact two-pass separable EDT.
DistanceMap distance_transform(const BinaryMask& mask);

/// Zhang-Suen thinning to a fixpoint. A component that the parallel deletion
/// would erase entirely (2x2 blocks, two-pixel diagonals) keeps its deepest
/// pixel, so the component count of the input is preserved.
BinaryMask zhang_suen_thin(const BinaryMask& mask);

struct MedialAxis {
    BinaryMask skeleton;
    DistanceMap dist;
};

/// Throws EmptyMask.
MedialAxis medial_axis(const BinaryMask& mask);

/// Geodesic length counted in axial and diagonal steps, compared exactly as
/// axial + diagonal * sqrt(2).
struct StepLength {
    long axial = 0;
    long diagonal = 0;

    double value() const noexcept;
    StepLength operator+(const StepLength& o) const noexcept {
        return {axial + o.axial, diagonal + o.diagonal};
    }
    StepLength operator-(const StepLength& o) const noexcept {
        return {axial - o.axial, diagonal - o.diagonal};
    }
    std::strong_ordering operator<=>(const StepLength& o) const noexcept;
    bool operator==(const StepLength& o) const noexcept = default;
};

/// 8-neighbour graph over skeleton pixels.
struct SkeletonGraph {
    int width = 0;
    int height = 0;
    std::vector<Pixel> nodes;               ///< row-major order
    std::vector<std::vector<int>> adjacency;  ///< ascending node indices
    std::vector<int> endpoints;             ///< nodes of degree 1, row-major
    std::vector<double> radii;              ///< distance-map value per node

    /// Node index at a pixel, or -1.
    int node_at(Pixel p) const noexcept;

    std::vector<int> index_;  ///< width * height lookup, -1 where no node
};

SkeletonGraph build_skeleton_graph(const BinaryMask& skeleton, const DistanceMap& dist);

struct SkeletonPath {
    std::vector<Pixel> nodes;  ///< q first, r last
    StepLength length;
};

/// Length of the 8-connected pixel chain nodes[from..to].
StepLength chain_length(std::span<const Pixel> nodes, std::size_t from, std::size_t to);

/// The endpoint pair with the longest shortest path along the skeleton. Ties
/// go to the lexicographically smallest (row, col) q, then r; q precedes r in
/// that order. Throws TooFewEndpoints or DisconnectedEndpoints.
SkeletonPath longest_endpoint_geodesic(const SkeletonGraph& graph);

/// Largest skeleton distance from any node to the nearest node of `path`,
/// over nodes connected to the path. Zero for an unbranched skeleton.
double longest_side_branch(const SkeletonGraph& graph, const SkeletonPath& path);

/// Marker-based priority flood (8-connectivity). Marker pixels are seeded in
/// row-major order; the queue orders by elevation then insertion age, and a
/// pixel takes its label when first pushed. Throws NoMarkers or
/// MarkerOutsideDomain.
LabelMap watershed(const GrayImage& elevation, const LabelMap& markers, const BinaryMask& domain);

/// Negated distance in integer millipixels, the elevation used for basins
/// that grow outward from the medial axis.
GrayImage negated_distance_elevation(const DistanceMap& dist);

struct CurvaturePoint {
    std::size_t index = 0;
    Point2 point;
    double turning_deg = 0.0;
};

/// k-cosine turning angle (degrees) at every vertex: 180 minus the angle
/// between the vectors to the vertices k behind and k ahead.
std::vector<double> k_cosine_turning(const Contour& contour, int k);

/// Local maxima of the k-cosine turning angle within +-k vertices that exceed
/// `min_turning_deg`, sorted by descending score (then index). On plateaus the
/// first vertex wins. Throws ContourTooShort if the contour has < 2k+1 points.
std::vector<CurvaturePoint> curvature_extrema(const Contour& contour, int k,
                                              double min_turning_deg = 45.0);

}  // namespace ratseg
