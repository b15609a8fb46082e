// Independent reference implementations used only to check the library:
// quadrature, grid searches, brute-force enumeration, and a dual
// projected-gradient bound for the piecewise-quadratic solver.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "densdiff/cqp.hpp"
#include "densdiff/rng.hpp"

namespace oracles {

// Trapezoid rule on [lo, hi] with `steps` intervals.
inline double trapezoid(const std::function<double(double)>& f, double lo,
                        double hi, int steps) {
    const double h = (hi - lo) / steps;
    double acc = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < steps; ++i) acc += f(lo + h * i);
    return acc * h;
}

// Lower bound on min F certified by weak duality: projected-gradient
// ascent on the concave dual
//   q(theta) = -1/2 s(theta)^T D^{-1} s(theta) + sum_k theta_k w_k t_k,
//   s(theta) = v + A^T (w . theta),  theta in [0,1]^m,
// where F(x) = sum_k w_k max(0,(Ax)_k + t_k) + v^T x + 1/2 x^T D x.
// Requires every reg entry > 0.
inline double dual_lower_bound(const densdiff::PiecewiseQuadratic& p,
                               int iterations) {
    const Eigen::Index m = p.hinge_weights.size();
    const Eigen::VectorXd dinv = p.reg.cwiseInverse();
    // grad q = w . (t - A D^{-1} s(theta))
    const auto grad = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        const Eigen::VectorXd s =
            p.linear + p.hinge_dirs.transpose() *
                           (p.hinge_weights.cwiseProduct(theta));
        return p.hinge_weights.cwiseProduct(
            p.hinge_offsets - p.hinge_dirs * dinv.cwiseProduct(s));
    };
    const auto q = [&](const Eigen::VectorXd& theta) -> double {
        const Eigen::VectorXd s =
            p.linear + p.hinge_dirs.transpose() *
                           (p.hinge_weights.cwiseProduct(theta));
        return -0.5 * s.dot(dinv.cwiseProduct(s)) +
               theta.dot(p.hinge_weights.cwiseProduct(p.hinge_offsets));
    };
    // Lipschitz constant of grad q: |W A D^{-1/2}|^2 via the Gram matrix.
    const Eigen::MatrixXd scaled =
        p.hinge_weights.asDiagonal() * p.hinge_dirs *
        dinv.cwiseSqrt().asDiagonal();
    const double lip =
        std::max(1e-12, (scaled * scaled.transpose()).operatorNorm());
    Eigen::VectorXd theta = Eigen::VectorXd::Constant(m, 0.5);
    double best = q(theta);
    for (int it = 0; it < iterations; ++it) {
        theta += grad(theta) / lip;
        theta = theta.cwiseMax(0.0).cwiseMin(1.0);
        best = std::max(best, q(theta));
    }
    return best;
}

// Exhaustive grid search over one variable.
inline std::pair<double, double> grid_search_1d(
    const std::function<double(double)>& f, double lo, double hi,
    double step) {
    double best_x = lo, best_f = f(lo);
    for (double x = lo; x <= hi + 0.5 * step; x += step) {
        const double v = f(x);
        if (v < best_f) {
            best_f = v;
            best_x = x;
        }
    }
    return {best_x, best_f};
}

inline std::pair<Eigen::Vector2d, double> grid_search_2d(
    const std::function<double(double, double)>& f, double lo, double hi,
    double step) {
    Eigen::Vector2d best{lo, lo};
    double best_f = f(lo, lo);
    for (double x = lo; x <= hi + 0.5 * step; x += step)
        for (double y = lo; y <= hi + 0.5 * step; y += step) {
            const double v = f(x, y);
            if (v < best_f) {
                best_f = v;
                best = {x, y};
            }
        }
    return {best, best_f};
}

// Random strictly-feasible instance of the piecewise-quadratic problem.
inline densdiff::PiecewiseQuadratic random_piecewise(std::uint64_t seed,
                                                     Eigen::Index max_b = 5,
                                                     Eigen::Index max_m = 12) {
    densdiff::Rng rng(seed);
    const Eigen::Index b = 1 + static_cast<Eigen::Index>(
                                   rng.next_below(static_cast<std::uint64_t>(max_b)));
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(
                                   rng.next_below(static_cast<std::uint64_t>(max_m)));
    densdiff::PiecewiseQuadratic p;
    p.hinge_dirs.resize(m, b);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < b; ++j)
            p.hinge_dirs(i, j) = rng.next_normal();
    p.hinge_offsets.resize(m);
    p.hinge_weights.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        p.hinge_offsets[i] = 2.0 * rng.next_double() - 1.0;
        p.hinge_weights[i] = 0.1 + rng.next_double();
    }
    p.linear.resize(b);
    for (Eigen::Index j = 0; j < b; ++j) p.linear[j] = rng.next_normal();
    p.reg = Eigen::VectorXd::Constant(b, 0.05 + rng.next_double());
    return p;
}

}  // namespace oracles
