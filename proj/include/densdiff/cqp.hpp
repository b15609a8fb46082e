#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "densdiff/data.hpp"

namespace densdiff {

// Convex objective of the form
//   F(x) = sum_k w_k max(0, (A x)_k + t_k) + v^T x + 1/2 x^T diag(reg) x,
// the shape shared by the CCCP upper-bound subproblem and the hinge
// relaxation (where the intercept carries zero regularization).
struct PiecewiseQuadratic {
    Eigen::MatrixXd hinge_dirs;     // m x b (rows a_k)
    Eigen::VectorXd hinge_offsets;  // m (t_k)
    Eigen::VectorXd hinge_weights;  // m (w_k > 0)
    Eigen::VectorXd linear;         // b (v)
    Eigen::VectorXd reg;            // b (diagonal of the quadratic term)

    Eigen::Index dim() const { return linear.size(); }
    double value(const Eigen::VectorXd& x) const;
};

// Slack-constrained upper-bound QP of the CCCP inner step, stated with
// the design matrices and the {0,1} bound variables.
struct UpperBoundProblem {
    Eigen::MatrixXd phi_q;  // n' x b, basis over X_p'
    Eigen::MatrixXd phi_p;  // n x b, basis over X_p
    Eigen::VectorXd bvec;   // n'
    Eigen::VectorXd cvec;   // n
    double lambda = 0.0;
};

struct QpSolution {
    Eigen::VectorXd alpha;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int inner_iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

// Eliminating the slacks turns the QP into the unconstrained F above.
PiecewiseQuadratic to_piecewise(const UpperBoundProblem& problem);

// Minimizes F by smoothed Newton descent with an active-set polish;
// kkt_residual is the norm of the minimum-norm subgradient at the result.
// An empty warm_start means start from zero.
QpSolution minimize_piecewise(const PiecewiseQuadratic& problem, double tol,
                              int max_inner,
                              const Eigen::VectorXd& warm_start = {});

QpSolution solve_upper_bound(const UpperBoundProblem& problem, double tol,
                             int max_inner);

// Hinge-relaxed linear separator between the two sample sets:
// minimizes (1/n) sum H_1(w.x_i + b) + (1/n') sum H_1(-(w.x'_j + b))
// + lambda/2 |w|^2, with H_e(z) = max(0, e - z). This is the standard
// SVM hinge treating X_p as the positive set; the intercept carries no
// regularization.
std::pair<Eigen::VectorXd, double> solve_hinge(const Dataset& xp,
                                               const Dataset& xq,
                                               double lambda, double tol,
                                               int max_inner);

}  // namespace densdiff
