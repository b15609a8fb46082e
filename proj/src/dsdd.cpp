#include "densdiff/dsdd.hpp"

#include <cmath>
#include <stdexcept>

namespace densdiff {

double ramp(double z) {
    if (z > 1.0) return 1.0;
    if (z < -1.0) return -1.0;
    return z;
}

double plus_hinge(double eps, double z) { return std::max(0.0, z - eps); }

namespace {

void check_shapes(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& phi_q,
                  const Eigen::MatrixXd& phi_p) {
    if (phi_q.cols() != alpha.size() || phi_p.cols() != alpha.size())
        throw std::invalid_argument("alpha length does not match basis size");
    if (phi_q.rows() < 1 || phi_p.rows() < 1)
        throw std::invalid_argument("both sample sets must be non-empty");
}

double mean_ramp(const Eigen::VectorXd& g) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) s += ramp(g[i]);
    return s / static_cast<double>(g.size());
}

double mean_plus_hinge(double eps, const Eigen::VectorXd& g) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) s += plus_hinge(eps, g[i]);
    return s / static_cast<double>(g.size());
}

// Objective with a per-coefficient ridge, shared by the kernel and
// linear-model fits.
double objective_general(const Eigen::VectorXd& alpha,
                         const Eigen::MatrixXd& phi_q,
                         const Eigen::MatrixXd& phi_p,
                         const Eigen::VectorXd& reg) {
    return mean_ramp(phi_q * alpha) - mean_ramp(phi_p * alpha) +
           0.5 * reg.dot(alpha.cwiseProduct(alpha));
}

struct CccpCore {
    Eigen::VectorXd alpha;
    std::vector<double> trace;
    int iterations = 0;
    bool converged = false;
};

CccpCore cccp_core(const Eigen::MatrixXd& phi_q, const Eigen::MatrixXd& phi_p,
                   const Eigen::VectorXd& reg, const CccpConfig& config,
                   const Eigen::VectorXd* init = nullptr) {
    if (!(config.stop_E > 0.0) || config.max_outer < 1 || !(config.qp_tol > 0.0))
        throw std::invalid_argument("invalid CCCP configuration");
    const Eigen::Index nq = phi_q.rows();
    const Eigen::Index n = phi_p.rows();

    PiecewiseQuadratic sub;
    sub.hinge_dirs.resize(nq + n, phi_q.cols());
    sub.hinge_dirs << phi_q, phi_p;
    sub.hinge_offsets.resize(nq + n);
    sub.hinge_offsets.head(nq).setConstant(1.0);
    sub.hinge_offsets.tail(n).setConstant(-1.0);
    sub.hinge_weights.resize(nq + n);
    sub.hinge_weights.head(nq).setConstant(1.0 / static_cast<double>(nq));
    sub.hinge_weights.tail(n).setConstant(1.0 / static_cast<double>(n));
    sub.linear = Eigen::VectorXd::Zero(phi_q.cols());  // b = c = 0
    sub.reg = reg;

    CccpCore out;
    if (init != nullptr) {
        out.alpha = *init;
    } else {
        // alpha^1 = argmin J_vex; the zero-bound subproblem is J_vex itself.
        out.alpha =
            minimize_piecewise(sub, config.qp_tol, config.max_inner).alpha;
    }
    out.trace.push_back(objective_general(out.alpha, phi_q, phi_p, reg));

    for (int t = 0; t < config.max_outer; ++t) {
        ++out.iterations;
        const Eigen::VectorXd gq = phi_q * out.alpha;
        const Eigen::VectorXd gp = phi_p * out.alpha;
        sub.linear.setZero();
        for (Eigen::Index i = 0; i < nq; ++i)
            if (gq[i] >= 1.0)
                sub.linear -= phi_q.row(i).transpose() / static_cast<double>(nq);
        for (Eigen::Index j = 0; j < n; ++j)
            if (gp[j] >= -1.0)
                sub.linear -= phi_p.row(j).transpose() / static_cast<double>(n);

        const Eigen::VectorXd next =
            minimize_piecewise(sub, config.qp_tol, config.max_inner, out.alpha)
                .alpha;
        const double step = (next - out.alpha).norm();
        out.alpha = next;
        out.trace.push_back(objective_general(out.alpha, phi_q, phi_p, reg));
        if (!std::isfinite(out.trace.back()))
            throw std::runtime_error("non-finite CCCP objective");
        if (step <= config.stop_E) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace

double objective(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& phi_q,
                 const Eigen::MatrixXd& phi_p, double lambda) {
    check_shapes(alpha, phi_q, phi_p);
    return objective_general(alpha, phi_q, phi_p,
                             Eigen::VectorXd::Constant(alpha.size(), lambda));
}

std::pair<double, double> split_objective(const Eigen::VectorXd& alpha,
                                          const Eigen::MatrixXd& phi_q,
                                          const Eigen::MatrixXd& phi_p,
                                          double lambda) {
    check_shapes(alpha, phi_q, phi_p);
    const Eigen::VectorXd gq = phi_q * alpha;
    const Eigen::VectorXd gp = phi_p * alpha;
    const double j_vex = mean_plus_hinge(-1.0, gq) + mean_plus_hinge(1.0, gp) +
                         0.5 * lambda * alpha.squaredNorm();
    const double j_cave = -mean_plus_hinge(1.0, gq) - mean_plus_hinge(-1.0, gp);
    return {j_vex, j_cave};
}

BoundVars tighten_bound(const Eigen::VectorXd& alpha,
                        const Eigen::MatrixXd& phi_q,
                        const Eigen::MatrixXd& phi_p) {
    check_shapes(alpha, phi_q, phi_p);
    const Eigen::VectorXd gq = phi_q * alpha;
    const Eigen::VectorXd gp = phi_p * alpha;
    BoundVars bound;
    bound.b = (gq.array() < 1.0).select(0.0, Eigen::ArrayXd::Ones(gq.size()));
    bound.c = (gp.array() < -1.0).select(0.0, Eigen::ArrayXd::Ones(gp.size()));
    return bound;
}

double concave_bound(const Eigen::VectorXd& alpha, const BoundVars& bound,
                     const Eigen::MatrixXd& phi_q,
                     const Eigen::MatrixXd& phi_p) {
    check_shapes(alpha, phi_q, phi_p);
    if (bound.b.size() != phi_q.rows() || bound.c.size() != phi_p.rows())
        throw std::invalid_argument("bound variable shapes do not match");
    if ((bound.b.array() < 0.0).any() || (bound.b.array() > 1.0).any() ||
        (bound.c.array() < 0.0).any() || (bound.c.array() > 1.0).any())
        throw std::invalid_argument("bound entries must lie in [0, 1]");
    const Eigen::VectorXd gq = phi_q * alpha;
    const Eigen::VectorXd gp = phi_p * alpha;
    const double term_q =
        bound.b.dot((1.0 - gq.array()).matrix()) / static_cast<double>(gq.size());
    const double term_p =
        bound.c.dot((-1.0 - gp.array()).matrix()) / static_cast<double>(gp.size());
    return term_q + term_p;
}

DsddModel cccp_fit(const Dataset& xp, const Dataset& xq,
                   const GaussianBasis& basis, const CccpConfig& config) {
    validate(xp);
    validate(xq);
    validate(basis);
    if (xp.dim() != basis.dim() || xq.dim() != basis.dim())
        throw std::invalid_argument("dataset dimension does not match basis");
    if (!(config.lambda > 0.0))
        throw std::invalid_argument("lambda must be > 0");

    const Eigen::MatrixXd phi_q = eval_basis(basis, xq);
    const Eigen::MatrixXd phi_p = eval_basis(basis, xp);
    const CccpCore core = cccp_core(
        phi_q, phi_p, Eigen::VectorXd::Constant(basis.size(), config.lambda),
        config);

    DsddModel model;
    model.basis = basis;
    model.alpha = core.alpha;
    model.lambda = config.lambda;
    model.objective_trace = core.trace;
    model.iterations = core.iterations;
    model.converged = core.converged;
    return model;
}

Eigen::VectorXd decision_values(const DsddModel& model, const Dataset& x) {
    return eval_basis(model.basis, x) * model.alpha;
}

Eigen::VectorXi predict_sign(const DsddModel& model, const Dataset& x) {
    const Eigen::VectorXd g = decision_values(model, x);
    Eigen::VectorXi labels(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) labels[i] = g[i] >= 0.0 ? 1 : -1;
    return labels;
}

std::pair<Eigen::VectorXd, double> hinge_relaxed_fit(const Dataset& xp,
                                                     const Dataset& xq,
                                                     double lambda) {
    return solve_hinge(xp, xq, lambda, 1e-8, 4000);
}

std::pair<Eigen::VectorXd, double> ramp_linear_fit(const Dataset& xp,
                                                   const Dataset& xq,
                                                   const CccpConfig& config) {
    validate(xp);
    validate(xq);
    if (xp.dim() != xq.dim())
        throw std::invalid_argument("datasets must share dimension");
    const Eigen::Index d = xp.dim();

    // Linear model g(x) = w.x + intercept as a basis: raw coordinates
    // plus a constant feature, intercept unregularized. The objective
    // orientation matches the hinge relaxation (X_p positive).
    auto with_intercept = [d](const Eigen::MatrixXd& s) {
        Eigen::MatrixXd out(s.rows(), d + 1);
        out.leftCols(d) = s;
        out.col(d).setOnes();
        return out;
    };
    Eigen::VectorXd reg = Eigen::VectorXd::Constant(d + 1, config.lambda);
    reg[d] = 0.0;

    // With a free intercept the convex-part minimizer is the saturated
    // point w = 0, g <= -1 everywhere, which is also a fixed point of the
    // bound-tightening loop. Start instead from the hinge-relaxed solution:
    // the ramp objective is that relaxation plus its concave corrections,
    // and the descent property holds from any starting point.
    const auto [w0, b0] = hinge_relaxed_fit(xp, xq, config.lambda);
    Eigen::VectorXd init(d + 1);
    init.head(d) = w0;
    init[d] = b0;

    const CccpCore core = cccp_core(with_intercept(xq.samples),
                                    with_intercept(xp.samples), reg, config,
                                    &init);
    return {core.alpha.head(d), core.alpha[d]};
}

}  // namespace densdiff
