#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "densdiff/basis.hpp"
#include "densdiff/cqp.hpp"
#include "densdiff/data.hpp"

namespace densdiff {

// Sign-of-density-difference model: g(x) = sum_l alpha_l phi_l(x),
// labels by sign(g).
struct DsddModel {
    GaussianBasis basis;
    Eigen::VectorXd alpha;
    double lambda = 0.0;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
};

// Per-sample {0,1} multipliers parameterizing the linear majorizer of
// the concave part.
struct BoundVars {
    Eigen::VectorXd b;  // length n', one per sample of X_p'
    Eigen::VectorXd c;  // length n, one per sample of X_p
};

struct CccpConfig {
    double lambda = 0.1;
    double stop_E = 1e-5;   // outer stop: |alpha_{t+1} - alpha_t| <= stop_E
    int max_outer = 100;
    double qp_tol = 1e-8;
    int max_inner = 2000;
};

// Clip of z to [-1, 1].
double ramp(double z);

// C_eps(z) = max(0, z - eps), the convex building block of the ramp.
double plus_hinge(double eps, double z);

// J(alpha) = mean R(g(x')) - mean R(g(x)) + lambda/2 |alpha|^2.
double objective(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& phi_q,
                 const Eigen::MatrixXd& phi_p, double lambda);

// Convex/concave split with J_vex + J_cave = J exactly.
std::pair<double, double> split_objective(const Eigen::VectorXd& alpha,
                                          const Eigen::MatrixXd& phi_q,
                                          const Eigen::MatrixXd& phi_p,
                                          double lambda);

// Closed-form minimizer of the majorizer over (b, c) at fixed alpha:
// b_i = 0 iff g(x'_i) < 1, c_j = 0 iff g(x_j) < -1.
BoundVars tighten_bound(const Eigen::VectorXd& alpha,
                        const Eigen::MatrixXd& phi_q,
                        const Eigen::MatrixXd& phi_p);

// Linear majorizer of the concave part; equals J_cave when the bound
// comes from tighten_bound.
double concave_bound(const Eigen::VectorXd& alpha, const BoundVars& bound,
                     const Eigen::MatrixXd& phi_q,
                     const Eigen::MatrixXd& phi_p);

// CCCP driver: initialize at argmin J_vex (the b = c = 0 subproblem),
// then alternate tightening and upper-bound minimization until the
// alpha step drops below stop_E.
DsddModel cccp_fit(const Dataset& xp, const Dataset& xq,
                   const GaussianBasis& basis, const CccpConfig& config);

Eigen::VectorXd decision_values(const DsddModel& model, const Dataset& x);

// +1 where g(x) >= 0, else -1.
Eigen::VectorXi predict_sign(const DsddModel& model, const Dataset& x);

// Convex hinge relaxation with a linear model (w, intercept).
std::pair<Eigen::VectorXd, double> hinge_relaxed_fit(const Dataset& xp,
                                                     const Dataset& xq,
                                                     double lambda);

// Ramp objective with the same linear model, minimized by CCCP; the
// non-convex counterpart of hinge_relaxed_fit.
std::pair<Eigen::VectorXd, double> ramp_linear_fit(const Dataset& xp,
                                                   const Dataset& xq,
                                                   const CccpConfig& config);

}  // namespace densdiff
