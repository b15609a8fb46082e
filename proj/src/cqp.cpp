#include "densdiff/cqp.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace densdiff {

namespace {

double softplus(double z, double beta) {
    const double bz = beta * z;
    if (bz > 34.0) return z;
    if (bz < -34.0) return 0.0;
    return std::log1p(std::exp(bz)) / beta;
}

double sigmoid(double z) {
    if (z > 34.0) return 1.0;
    if (z < -34.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-z));
}

void check(const PiecewiseQuadratic& p) {
    const Eigen::Index m = p.hinge_dirs.rows();
    if (p.hinge_offsets.size() != m || p.hinge_weights.size() != m)
        throw std::invalid_argument("inconsistent hinge term shapes");
    if (p.hinge_dirs.cols() != p.dim() || p.reg.size() != p.dim())
        throw std::invalid_argument("inconsistent problem dimension");
    if ((p.hinge_weights.array() <= 0.0).any())
        throw std::invalid_argument("hinge weights must be positive");
    if ((p.reg.array() < 0.0).any())
        throw std::invalid_argument("regularization must be non-negative");
}

double smoothed_value(const PiecewiseQuadratic& p, const Eigen::VectorXd& x,
                      double beta) {
    const Eigen::VectorXd z = p.hinge_dirs * x + p.hinge_offsets;
    double v = p.linear.dot(x) + 0.5 * p.reg.dot(x.cwiseProduct(x));
    for (Eigen::Index k = 0; k < z.size(); ++k)
        v += p.hinge_weights[k] * softplus(z[k], beta);
    return v;
}

// Minimum-norm element of the subdifferential at x; the free weights of
// kink-active terms are optimized over the [0,1] box by projected
// gradient on the resulting small least-squares problem.
double min_norm_subgradient(const PiecewiseQuadratic& p,
                            const Eigen::VectorXd& x, double active_tol) {
    const Eigen::VectorXd z = p.hinge_dirs * x + p.hinge_offsets;
    Eigen::VectorXd base = p.linear + p.reg.cwiseProduct(x);
    std::vector<Eigen::Index> active;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        if (z[k] > active_tol)
            base += p.hinge_weights[k] * p.hinge_dirs.row(k).transpose();
        else if (std::abs(z[k]) <= active_tol)
            active.push_back(k);
    }
    if (active.empty()) return base.norm();

    Eigen::MatrixXd dirs(p.dim(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j)
        dirs.col(static_cast<Eigen::Index>(j)) =
            p.hinge_weights[active[j]] * p.hinge_dirs.row(active[j]).transpose();

    Eigen::VectorXd theta =
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(active.size()), 0.5);
    const double lip = dirs.squaredNorm() + 1e-300;
    const double step = 1.0 / lip;
    // accelerated projected gradient; the plain scheme crawls when the
    // active directions are nearly collinear
    Eigen::VectorXd y = theta;
    double t_mom = 1.0;
    for (int it = 0; it < 50000; ++it) {
        const Eigen::VectorXd grad = dirs.transpose() * (base + dirs * y);
        const Eigen::VectorXd next =
            (y - step * grad).cwiseMax(0.0).cwiseMin(1.0);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
        y = next + ((t_mom - 1.0) / t_next) * (next - theta);
        const double moved = (next - theta).norm();
        theta = next;
        t_mom = t_next;
        if (moved <= 1e-14 * (1.0 + theta.norm())) break;
    }
    return (base + dirs * theta).norm();
}

// Exact finish: fix the sign pattern seen at x, pin kink-active terms to
// zero via equality constraints, and solve the KKT system. Accepted only
// if the multipliers and inactive signs come back consistent.
bool active_set_polish(const PiecewiseQuadratic& p, Eigen::VectorXd& x) {
    constexpr double kActTol = 1e-6;
    const Eigen::VectorXd z = p.hinge_dirs * x + p.hinge_offsets;
    Eigen::VectorXd rhs_top = -p.linear;
    std::vector<Eigen::Index> active;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        if (z[k] > kActTol)
            rhs_top -= p.hinge_weights[k] * p.hinge_dirs.row(k).transpose();
        else if (z[k] >= -kActTol)
            active.push_back(k);
    }
    const Eigen::Index b = p.dim();
    const Eigen::Index na = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(b + na, b + na);
    kkt.topLeftCorner(b, b) = p.reg.asDiagonal();
    Eigen::VectorXd rhs(b + na);
    rhs.head(b) = rhs_top;
    for (Eigen::Index j = 0; j < na; ++j) {
        kkt.block(0, b + j, b, 1) = p.hinge_dirs.row(active[static_cast<std::size_t>(j)]).transpose();
        kkt.block(b + j, 0, 1, b) = p.hinge_dirs.row(active[static_cast<std::size_t>(j)]);
        rhs[b + j] = -p.hinge_offsets[active[static_cast<std::size_t>(j)]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return false;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd cand = sol.head(b);
    if (!cand.allFinite()) return false;

    for (Eigen::Index j = 0; j < na; ++j) {
        const double theta =
            sol[b + j] / p.hinge_weights[active[static_cast<std::size_t>(j)]];
        if (theta < -1e-9 || theta > 1.0 + 1e-9) return false;
    }
    const Eigen::VectorXd znew = p.hinge_dirs * cand + p.hinge_offsets;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        if (z[k] > kActTol && znew[k] < -1e-9) return false;
        if (z[k] < -kActTol && znew[k] > 1e-9) return false;
    }
    if (p.value(cand) > p.value(x) + 1e-12) return false;
    x = cand;
    return true;
}

}  // namespace

double PiecewiseQuadratic::value(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z = hinge_dirs * x + hinge_offsets;
    return hinge_weights.dot(z.cwiseMax(0.0)) + linear.dot(x) +
           0.5 * reg.dot(x.cwiseProduct(x));
}

QpSolution minimize_piecewise(const PiecewiseQuadratic& p, double tol,
                              int max_inner,
                              const Eigen::VectorXd& warm_start) {
    check(p);
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");

    const Eigen::Index b = p.dim();
    const Eigen::Index m = p.hinge_dirs.rows();
    QpSolution sol;
    if (warm_start.size() == b)
        sol.alpha = warm_start;
    else
        sol.alpha = Eigen::VectorXd::Zero(b);
    sol.objective_trace.push_back(p.value(sol.alpha));

    int iters = 0;
    // a warm start is assumed to sit near the solution, so the smoothing
    // ladder can skip its coarse stages
    const double first_beta = warm_start.size() == b ? 256.0 : 4.0;
    for (int pass = 0; pass < 8 && iters < max_inner; ++pass) {
    const double beta_start = pass == 0 ? first_beta : 256.0;
    for (double beta = beta_start; beta <= 2.0e7 && iters < max_inner;
         beta *= 8.0) {
        for (int stage_it = 0; stage_it < 40 && iters < max_inner; ++stage_it) {
            const Eigen::VectorXd z = p.hinge_dirs * sol.alpha + p.hinge_offsets;
            Eigen::VectorXd sig(m), curv(m);
            for (Eigen::Index k = 0; k < m; ++k) {
                sig[k] = sigmoid(beta * z[k]);
                curv[k] = p.hinge_weights[k] * beta * sig[k] * (1.0 - sig[k]);
            }
            const Eigen::VectorXd grad =
                p.hinge_dirs.transpose() * p.hinge_weights.cwiseProduct(sig) +
                p.linear + p.reg.cwiseProduct(sol.alpha);
            if (grad.norm() <= std::max(1e-12, 1e-3 / beta)) break;

            // only kink-adjacent terms curve; assembling from those rows
            // alone keeps the cost proportional to the active set
            const double curv_cut = 1e-14 * curv.maxCoeff();
            std::vector<Eigen::Index> curved;
            curved.reserve(static_cast<std::size_t>(m));
            for (Eigen::Index k = 0; k < m; ++k)
                if (curv[k] > curv_cut) curved.push_back(k);
            Eigen::MatrixXd rows(static_cast<Eigen::Index>(curved.size()), b);
            Eigen::VectorXd row_curv(static_cast<Eigen::Index>(curved.size()));
            for (std::size_t j = 0; j < curved.size(); ++j) {
                rows.row(static_cast<Eigen::Index>(j)) =
                    p.hinge_dirs.row(curved[j]);
                row_curv[static_cast<Eigen::Index>(j)] = curv[curved[j]];
            }
            Eigen::MatrixXd hess =
                rows.transpose() * row_curv.asDiagonal() * rows;
            hess.diagonal() += p.reg;
            const double damp = 1e-12 * (1.0 + hess.diagonal().maxCoeff());
            hess.diagonal().array() += damp;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
            Eigen::VectorXd dir = -ldlt.solve(grad);
            if (!dir.allFinite() || grad.dot(dir) >= 0.0) dir = -grad;

            const double f_cur = p.value(sol.alpha);
            const double fs_cur = smoothed_value(p, sol.alpha, beta);
            const double slope = grad.dot(dir);
            double step = 1.0;
            bool accepted = false;
            for (int h = 0; h < 50; ++h) {
                const Eigen::VectorXd cand = sol.alpha + step * dir;
                if (smoothed_value(p, cand, beta) <=
                        fs_cur + 1e-4 * step * slope &&
                    p.value(cand) <= f_cur + 1e-12) {
                    sol.alpha = cand;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            ++iters;
            if (!accepted) break;
            sol.objective_trace.push_back(p.value(sol.alpha));
            if (step * dir.norm() <= 1e-13 * (1.0 + sol.alpha.norm())) break;
        }
    }
    // a restart pass is only worthwhile while the nonsmooth optimality
    // residual is still above tolerance
    if (min_norm_subgradient(p, sol.alpha, 1e-7) <= tol) break;
    Eigen::VectorXd polished = sol.alpha;
    if (active_set_polish(p, polished) &&
        p.value(polished) <= p.value(sol.alpha)) {
        sol.alpha = polished;
        if (min_norm_subgradient(p, sol.alpha, 1e-7) <= tol) break;
    }
    }

    active_set_polish(p, sol.alpha);
    sol.objective = p.value(sol.alpha);
    if (sol.objective <= sol.objective_trace.back())
        sol.objective_trace.push_back(sol.objective);
    if (!sol.alpha.allFinite() || !std::isfinite(sol.objective))
        throw std::runtime_error("non-finite iterate in QP solver");
    sol.kkt_residual = min_norm_subgradient(p, sol.alpha, 1e-7);
    sol.inner_iterations = iters;
    sol.converged = sol.kkt_residual <= tol;
    return sol;
}

PiecewiseQuadratic to_piecewise(const UpperBoundProblem& problem) {
    const Eigen::Index nq = problem.phi_q.rows();
    const Eigen::Index n = problem.phi_p.rows();
    const Eigen::Index b = problem.phi_q.cols();
    if (problem.phi_p.cols() != b)
        throw std::invalid_argument("design matrices must share basis size");
    if (problem.bvec.size() != nq || problem.cvec.size() != n)
        throw std::invalid_argument("bound variable shapes do not match");
    if (!(problem.lambda > 0.0))
        throw std::invalid_argument("lambda must be > 0 for a strictly convex QP");

    PiecewiseQuadratic p;
    p.hinge_dirs.resize(nq + n, b);
    p.hinge_dirs << problem.phi_q, problem.phi_p;
    p.hinge_offsets.resize(nq + n);
    p.hinge_offsets.head(nq).setConstant(1.0);
    p.hinge_offsets.tail(n).setConstant(-1.0);
    p.hinge_weights.resize(nq + n);
    p.hinge_weights.head(nq).setConstant(1.0 / static_cast<double>(nq));
    p.hinge_weights.tail(n).setConstant(1.0 / static_cast<double>(n));
    p.linear = -(problem.phi_q.transpose() * problem.bvec) /
                   static_cast<double>(nq) -
               (problem.phi_p.transpose() * problem.cvec) / static_cast<double>(n);
    p.reg = Eigen::VectorXd::Constant(b, problem.lambda);
    return p;
}

QpSolution solve_upper_bound(const UpperBoundProblem& problem, double tol,
                             int max_inner) {
    return minimize_piecewise(to_piecewise(problem), tol, max_inner);
}

std::pair<Eigen::VectorXd, double> solve_hinge(const Dataset& xp,
                                               const Dataset& xq,
                                               double lambda, double tol,
                                               int max_inner) {
    validate(xp);
    validate(xq);
    if (xp.dim() != xq.dim())
        throw std::invalid_argument("datasets must share dimension");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");

    const Eigen::Index d = xp.dim();
    const Eigen::Index n = xp.n();
    const Eigen::Index nq = xq.n();
    PiecewiseQuadratic p;
    p.hinge_dirs.resize(n + nq, d + 1);
    p.hinge_dirs.topLeftCorner(n, d) = -xp.samples;
    p.hinge_dirs.topRightCorner(n, 1).setConstant(-1.0);
    p.hinge_dirs.bottomLeftCorner(nq, d) = xq.samples;
    p.hinge_dirs.bottomRightCorner(nq, 1).setConstant(1.0);
    p.hinge_offsets.resize(n + nq);
    p.hinge_offsets.setConstant(1.0);
    p.hinge_weights.resize(n + nq);
    p.hinge_weights.head(n).setConstant(1.0 / static_cast<double>(n));
    p.hinge_weights.tail(nq).setConstant(1.0 / static_cast<double>(nq));
    p.linear = Eigen::VectorXd::Zero(d + 1);
    p.reg = Eigen::VectorXd::Constant(d + 1, lambda);
    p.reg[d] = 0.0;  // intercept is unregularized

    const QpSolution sol = minimize_piecewise(p, tol, max_inner);
    return {sol.alpha.head(d), sol.alpha[d]};
}

}  // namespace densdiff
