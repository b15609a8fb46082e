#include "densdiff/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "densdiff/rng.hpp"

namespace densdiff {

namespace {

Eigen::VectorXd mean_design(const Eigen::MatrixXd& phi) {
    return phi.colwise().mean().transpose();
}

Eigen::MatrixXd pairwise_sq_dists(const Eigen::MatrixXd& x) {
    const Eigen::VectorXd norms = x.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = norms.replicate(1, x.rows()) +
                         norms.transpose().replicate(x.rows(), 1) -
                         2.0 * x * x.transpose();
    return d2.cwiseMax(0.0);
}

}  // namespace

LsddModel lsdd_fit(const Dataset& xp, const Dataset& xq, double sigma,
                   double lambda, Eigen::Index max_centers,
                   std::uint64_t seed) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    LsddModel model;
    model.basis = build_basis(xp, xq, sigma, max_centers, seed);
    model.lambda = lambda;

    const Eigen::MatrixXd gram = analytic_gram(model.basis);
    const Eigen::VectorXd h_hat = mean_design(eval_basis(model.basis, xp)) -
                                  mean_design(eval_basis(model.basis, xq));
    Eigen::MatrixXd system = gram;
    system.diagonal().array() += lambda;
    model.theta = Eigen::LDLT<Eigen::MatrixXd>(system).solve(h_hat);

    const double scale = std::max(h_hat.norm(), 1.0);
    if (!model.theta.allFinite() ||
        (system * model.theta - h_hat).norm() > 1e-10 * scale)
        throw std::runtime_error(
            "LSDD system is singular or ill-conditioned; use lambda > 0");
    return model;
}

Eigen::VectorXd lsdd_values(const LsddModel& model, const Dataset& x) {
    return eval_basis(model.basis, x) * model.theta;
}

Eigen::VectorXi lsdd_label(const LsddModel& model, const Dataset& x) {
    const Eigen::VectorXd g = lsdd_values(model, x);
    Eigen::VectorXi labels(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) labels[i] = g[i] >= 0.0 ? 1 : -1;
    return labels;
}

LsddSelection lsdd_cross_validate(const Dataset& xp, const Dataset& xq,
                                  const std::vector<double>& sigma_grid,
                                  const std::vector<double>& lambda_grid,
                                  int folds, std::uint64_t seed,
                                  Eigen::Index max_centers) {
    if (sigma_grid.empty() || lambda_grid.empty())
        throw std::invalid_argument("hyperparameter grids must be non-empty");
    const auto folds_p = kfold_indices(xp.n(), folds, derive_seed(seed, 1));
    const auto folds_q = kfold_indices(xq.n(), folds, derive_seed(seed, 2));

    LsddSelection best;
    double best_score = std::numeric_limits<double>::infinity();
    for (double sigma : sigma_grid) {
        for (double lambda : lambda_grid) {
            double score = 0.0;
            bool ok = true;
            for (int f = 0; f < folds && ok; ++f) {
                const Dataset tr_p = rows(xp, folds_p[static_cast<std::size_t>(f)].first);
                const Dataset tr_q = rows(xq, folds_q[static_cast<std::size_t>(f)].first);
                const Dataset va_p = rows(xp, folds_p[static_cast<std::size_t>(f)].second);
                const Dataset va_q = rows(xq, folds_q[static_cast<std::size_t>(f)].second);
                try {
                    const LsddModel model =
                        lsdd_fit(tr_p, tr_q, sigma, lambda, max_centers,
                                 derive_seed(seed, 3 + static_cast<std::uint64_t>(f)));
                    const Eigen::MatrixXd gram = analytic_gram(model.basis);
                    const Eigen::VectorXd h_val =
                        mean_design(eval_basis(model.basis, va_p)) -
                        mean_design(eval_basis(model.basis, va_q));
                    score += 0.5 * model.theta.dot(gram * model.theta) -
                             h_val.dot(model.theta);
                } catch (const std::runtime_error&) {
                    ok = false;
                }
            }
            if (!ok) continue;
            score /= static_cast<double>(folds);
            const bool tie_smoother =
                score == best_score &&
                (sigma > best.sigma ||
                 (sigma == best.sigma && lambda > best.lambda));
            if (score < best_score || tie_smoother) {
                best_score = score;
                best = {sigma, lambda};
            }
        }
    }
    if (!std::isfinite(best_score))
        throw std::runtime_error("LSDD cross-validation failed on every cell");
    return best;
}

KdeModel kde_fit(const Dataset& x, double sigma) {
    validate(x);
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
    return KdeModel{x, sigma};
}

double kde_density(const KdeModel& model, const Eigen::VectorXd& x) {
    const double s2 = model.sigma * model.sigma;
    const double norm = std::pow(2.0 * 3.14159265358979323846 * s2,
                                 -0.5 * static_cast<double>(model.samples.dim()));
    const Eigen::VectorXd d2 =
        (model.samples.samples.rowwise() - x.transpose()).rowwise().squaredNorm();
    return norm * (-d2.array() / (2.0 * s2)).exp().mean();
}

double kde_lscv_score(const Dataset& x, double sigma) {
    validate(x);
    if (x.n() < 2) throw std::invalid_argument("LSCV needs at least 2 samples");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
    const Eigen::Index n = x.n();
    const double d = static_cast<double>(x.dim());
    const double s2 = sigma * sigma;
    const Eigen::MatrixXd d2 = pairwise_sq_dists(x.samples);

    // Integral of the squared estimate: Gaussian convolution in closed
    // form, kernel width 2 sigma^2.
    const double norm4 = std::pow(4.0 * 3.14159265358979323846 * s2, -0.5 * d);
    const double integral =
        norm4 * (-d2.array() / (4.0 * s2)).exp().sum() /
        (static_cast<double>(n) * static_cast<double>(n));

    // Leave-one-out data term.
    const double norm2 = std::pow(2.0 * 3.14159265358979323846 * s2, -0.5 * d);
    double loo = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) s += std::exp(-d2(i, j) / (2.0 * s2));
        loo += norm2 * s / static_cast<double>(n - 1);
    }
    loo /= static_cast<double>(n);
    return integral - 2.0 * loo;
}

double kde_lscv(const Dataset& x, const std::vector<double>& sigma_grid) {
    if (sigma_grid.empty()) throw std::invalid_argument("sigma grid is empty");
    double best = sigma_grid.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (double sigma : sigma_grid) {
        const double score = kde_lscv_score(x, sigma);
        if (score < best_score) {
            best_score = score;
            best = sigma;
        }
    }
    return best;
}

std::pair<Eigen::VectorXi, Eigen::VectorXi> kde_label(
    const Dataset& xp, const Dataset& xq,
    const std::vector<double>& sigma_grid) {
    if (xp.dim() != xq.dim())
        throw std::invalid_argument("datasets must share dimension");
    const KdeModel mp = kde_fit(xp, kde_lscv(xp, sigma_grid));
    const KdeModel mq = kde_fit(xq, kde_lscv(xq, sigma_grid));
    auto label = [&](const Dataset& x) {
        Eigen::VectorXi labels(x.n());
        for (Eigen::Index i = 0; i < x.n(); ++i) {
            const Eigen::VectorXd point = x.samples.row(i).transpose();
            labels[i] =
                kde_density(mp, point) - kde_density(mq, point) >= 0.0 ? 1 : -1;
        }
        return labels;
    };
    return {label(xp), label(xq)};
}

namespace {

double lloyd(const Eigen::MatrixXd& x, int k, int max_iter, Rng& rng,
             Eigen::VectorXi& assign) {
    const Eigen::Index n = x.rows();
    // k-means++ seeding
    Eigen::MatrixXd centers(k, x.cols());
    centers.row(0) = x.row(static_cast<Eigen::Index>(rng.next_below(
        static_cast<std::uint64_t>(n))));
    Eigen::VectorXd d2 =
        (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double u = rng.next_double() * total;
            for (Eigen::Index i = 0; i < n; ++i) {
                u -= d2[i];
                if (u <= 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(
                rng.next_below(static_cast<std::uint64_t>(n)));
        }
        centers.row(c) = x.row(pick);
        d2 = d2.cwiseMin(
            (x.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }

    assign.setConstant(n, -1);
    double wcss = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        double new_wcss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (x.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d = (x.row(i) - centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) changed = true;
            assign[i] = best;
            new_wcss += best_d;
        }
        wcss = new_wcss;
        if (!changed && it > 0) break;
        // update step; an emptied cluster grabs the farthest point
        for (int c = 0; c < k; ++c) {
            Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(x.cols());
            Eigen::Index count = 0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (assign[i] == c) {
                    sum += x.row(i);
                    ++count;
                }
            if (count > 0) {
                centers.row(c) = sum / static_cast<double>(count);
            } else {
                Eigen::Index far = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double d =
                        (x.row(i) - centers.row(assign[i])).squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centers.row(c) = x.row(far);
            }
        }
    }
    return wcss;
}

}  // namespace

Eigen::VectorXi kmeans(const Dataset& x, int k, int restarts, int max_iter,
                       std::uint64_t seed) {
    validate(x);
    if (k < 1 || static_cast<Eigen::Index>(k) > x.n())
        throw std::invalid_argument("k must satisfy 1 <= k <= n");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");

    Eigen::VectorXi best_assign;
    double best_wcss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        Eigen::VectorXi assign;
        const double wcss = lloyd(x.samples, k, max_iter, rng, assign);
        if (wcss < best_wcss) {
            best_wcss = wcss;
            best_assign = assign;
        }
    }
    return best_assign;
}

Eigen::VectorXi spectral_cluster(const Dataset& x, int knn,
                                 std::uint64_t seed) {
    validate(x);
    const Eigen::Index n = x.n();
    if (knn < 1 || static_cast<Eigen::Index>(knn) >= n)
        throw std::invalid_argument("knn must satisfy 1 <= knn < n");

    const Eigen::MatrixXd d2 = pairwise_sq_dists(x.samples);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) {
                             return d2(i, a) < d2(i, b);
                         });
        int added = 0;
        for (Eigen::Index j : order) {
            if (j == i) continue;
            w(i, j) = w(j, i) = 1.0;  // edge if either endpoint lists the other
            if (++added == knn) break;
        }
    }

    // connected components of the affinity graph
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    int n_comp = 0;
    for (Eigen::Index s = 0; s < n; ++s) {
        if (comp[static_cast<std::size_t>(s)] >= 0) continue;
        std::queue<Eigen::Index> todo;
        todo.push(s);
        comp[static_cast<std::size_t>(s)] = n_comp;
        while (!todo.empty()) {
            const Eigen::Index u = todo.front();
            todo.pop();
            for (Eigen::Index v = 0; v < n; ++v)
                if (w(u, v) > 0.0 && comp[static_cast<std::size_t>(v)] < 0) {
                    comp[static_cast<std::size_t>(v)] = n_comp;
                    todo.push(v);
                }
        }
        ++n_comp;
    }
    if (n_comp > 2)
        throw std::runtime_error(
            "kNN graph has more than 2 components; increase knn");
    if (n_comp == 2) {
        Eigen::VectorXi labels(n);
        for (Eigen::Index i = 0; i < n; ++i)
            labels[i] = comp[static_cast<std::size_t>(i)];
        return labels;
    }

    const Eigen::VectorXd degree = w.rowwise().sum();
    const Eigen::VectorXd dinv_sqrt = degree.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd lap =
        dinv_sqrt.asDiagonal() * w * dinv_sqrt.asDiagonal();
    lap = -lap;
    lap.diagonal().array() += 1.0;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed");
    // Fiedler direction in the generalized (Shi-Malik) coordinates.
    const Eigen::VectorXd embed =
        dinv_sqrt.asDiagonal() * eig.eigenvectors().col(1);
    return kmeans(Dataset{embed}, 2, 5, 100, seed);
}

}  // namespace densdiff
