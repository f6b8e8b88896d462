#pragma once

#include <vector>

#include "ratseg/raster.hpp"

namespace ratseg {

/// Uniform cardinal B-spline of the given degree, supported on [0, degree + 1).
double cardinal_bspline(int degree, double x);

/// Closed uniform B-spline curve; the parameter runs over [0, control.size()).
struct ClosedBSpline {
    int degree = 4;
    std::vector<Point2> control;

    Point2 eval(double t) const;
    /// `count` points at equally spaced parameter values.
    Contour sample(std::size_t count) const;
};

struct SplineFit {
    ClosedBSpline curve;
    double lambda = 0.0;             ///< penalty weight reached
    double residual_sq_sum = 0.0;    ///< sum of squared point residuals
};

/// Penalized least-squares fit of a closed B-spline to an ordered point loop
/// (chord-length parameterization, second-difference penalty on the control
/// polygon). The penalty weight is bisected so the residual sum of squares
/// approaches `smoothing`. Throws SplineFitFailure on degenerate input.
SplineFit fit_closed_bspline(const Contour& points, int degree, double smoothing);

}  // namespace ratseg
