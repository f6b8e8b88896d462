#include "ratseg/spline.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

namespace ratseg {

double cardinal_bspline(int degree, double x) {
    if (x < 0.0 || x >= degree + 1) return 0.0;
    // (1/d!) sum_k (-1)^k C(d+1, k) (x - k)_+^d
    double sum = 0.0;
    double binom = 1.0;
    for (int k = 0; k <= degree + 1; ++k) {
        const double u = x - k;
        if (u > 0.0) sum += ((k % 2) ? -binom : binom) * std::pow(u, degree);
        binom = binom * (degree + 1 - k) / (k + 1);
    }
    double fact = 1.0;
    for (int i = 2; i <= degree; ++i) fact *= i;
    return sum / fact;
}

Point2 ClosedBSpline::eval(double t) const {
    const int m = static_cast<int>(control.size());
    t = std::fmod(t, static_cast<double>(m));
    if (t < 0.0) t += m;
    const int base = static_cast<int>(std::floor(t));
    Point2 p;
    for (int i = base - degree; i <= base; ++i) {
        const double w = cardinal_bspline(degree, t - i);
        const Point2& c = control[static_cast<std::size_t>(((i % m) + m) % m)];
        p.x += w * c.x;
        p.y += w * c.y;
    }
    return p;
}

Contour ClosedBSpline::sample(std::size_t count) const {
    Contour out;
    out.reserve(count);
    const double m = static_cast<double>(control.size());
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(eval(m * static_cast<double>(i) / static_cast<double>(count)));
    return out;
}

SplineFit fit_closed_bspline(const Contour& pts, int degree, double smoothing) {
    if (degree < 1) throw Error(ErrorCode::InvalidArgument, "spline degree must be >= 1");
    const std::size_t n = pts.size();
    const int min_ctrl = 2 * (degree + 1);
    if (n < static_cast<std::size_t>(min_ctrl))
        throw Error(ErrorCode::SplineFitFailure, "too few boundary points for spline fit");

    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = pts[i];
        const Point2& b = pts[(i + 1) % n];
        cum[i + 1] = cum[i] + std::hypot(b.x - a.x, b.y - a.y);
    }
    const double length = cum[n];
    if (!(length > 0.0)) throw Error(ErrorCode::SplineFitFailure, "zero-length boundary");

    const int m = std::max(min_ctrl, static_cast<int>(n / 2));
    using Sp = Eigen::SparseMatrix<double>;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * static_cast<std::size_t>(degree + 1));
    for (std::size_t j = 0; j < n; ++j) {
        const double t = m * cum[j] / length;
        const int base = static_cast<int>(std::floor(t));
        for (int i = base - degree; i <= base; ++i) {
            const double w = cardinal_bspline(degree, t - i);
            if (w != 0.0) trip.emplace_back(static_cast<int>(j), ((i % m) + m) % m, w);
        }
    }
    Sp basis(static_cast<int>(n), m);
    basis.setFromTriplets(trip.begin(), trip.end());

    trip.clear();
    for (int i = 0; i < m; ++i) {
        trip.emplace_back(i, (i + m - 1) % m, 1.0);
        trip.emplace_back(i, i, -2.0);
        trip.emplace_back(i, (i + 1) % m, 1.0);
    }
    Sp diff(m, m);
    diff.setFromTriplets(trip.begin(), trip.end());

    const Sp btb = (basis.transpose() * basis).pruned();
    const Sp dtd = (diff.transpose() * diff).pruned();
    Eigen::MatrixXd data(static_cast<Eigen::Index>(n), 2);
    for (std::size_t j = 0; j < n; ++j) {
        data(static_cast<Eigen::Index>(j), 0) = pts[j].x;
        data(static_cast<Eigen::Index>(j), 1) = pts[j].y;
    }
    const Eigen::MatrixXd rhs = basis.transpose() * data;

    Eigen::SimplicialLDLT<Sp> solver;
    bool analyzed = false;
    auto solve = [&](double lambda, Eigen::MatrixXd& ctrl) {
        const Sp a = btb + lambda * dtd;
        if (!analyzed) {
            solver.analyzePattern(a);
            analyzed = true;
        }
        solver.factorize(a);
        if (solver.info() != Eigen::Success) return -1.0;
        ctrl = solver.solve(rhs);
        if (solver.info() != Eigen::Success || !ctrl.allFinite()) return -1.0;
        return (basis * ctrl - data).squaredNorm();
    };

    // The residual grows monotonically with the penalty; bisect in log space.
    Eigen::MatrixXd ctrl;
    double lo = -8.0;
    double hi = 8.0;
    double ssr = solve(std::pow(10.0, lo), ctrl);
    if (ssr < 0.0) throw Error(ErrorCode::SplineFitFailure, "spline system is singular");
    double best_log = lo;
    if (ssr < smoothing) {
        const double ssr_hi = solve(std::pow(10.0, hi), ctrl);
        if (ssr_hi < 0.0) throw Error(ErrorCode::SplineFitFailure, "spline system is singular");
        if (ssr_hi <= smoothing) {
            best_log = hi;
        } else {
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double s = solve(std::pow(10.0, mid), ctrl);
                if (s < 0.0)
                    throw Error(ErrorCode::SplineFitFailure, "spline system is singular");
                if (s < smoothing) lo = mid; else hi = mid;
                if (std::abs(s - smoothing) <= 1e-6 * std::max(1.0, smoothing)) break;
            }
            best_log = lo;
        }
    }
    SplineFit fit;
    fit.lambda = std::pow(10.0, best_log);
    fit.residual_sq_sum = solve(fit.lambda, ctrl);
    if (fit.residual_sq_sum < 0.0)
        throw Error(ErrorCode::SplineFitFailure, "spline system is singular");
    fit.curve.degree = degree;
    fit.curve.control.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) fit.curve.control[static_cast<std::size_t>(i)] = {ctrl(i, 0), ctrl(i, 1)};
    return fit;
}

}  // namespace ratseg
