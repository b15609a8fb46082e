#include "densdiff/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "densdiff/rng.hpp"

namespace densdiff {

void validate(const GaussianBasis& basis) {
    if (basis.size() < 1) throw std::invalid_argument("basis has no centers");
    if (!(basis.sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
    if (!basis.centers.allFinite())
        throw std::invalid_argument("basis centers must be finite");
}

GaussianBasis build_basis(const Dataset& xp, const Dataset& xq, double sigma,
                          Eigen::Index max_centers, std::uint64_t seed) {
    validate(xp);
    validate(xq);
    if (xp.dim() != xq.dim())
        throw std::invalid_argument("datasets must share dimension");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
    if (max_centers < 1) throw std::invalid_argument("max_centers must be >= 1");

    const Eigen::Index total = xp.n() + xq.n();
    Eigen::MatrixXd pooled(total, xp.dim());
    pooled << xp.samples, xq.samples;

    GaussianBasis basis;
    basis.sigma = sigma;
    if (total <= max_centers) {
        basis.centers = std::move(pooled);
    } else {
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        Rng rng(seed);
        for (Eigen::Index i = 0; i < max_centers; ++i) {
            const std::size_t j =
                static_cast<std::size_t>(i) +
                rng.next_below(idx.size() - static_cast<std::size_t>(i));
            std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
        }
        basis.centers.resize(max_centers, xp.dim());
        for (Eigen::Index i = 0; i < max_centers; ++i)
            basis.centers.row(i) = pooled.row(idx[static_cast<std::size_t>(i)]);
    }
    return basis;
}

Eigen::MatrixXd eval_basis(const GaussianBasis& basis, const Dataset& x) {
    validate(basis);
    if (x.dim() != basis.dim())
        throw std::invalid_argument("dataset dimension does not match basis");
    const double inv = 1.0 / (2.0 * basis.sigma * basis.sigma);
    Eigen::MatrixXd phi(x.n(), basis.size());
    for (Eigen::Index i = 0; i < x.n(); ++i)
        phi.row(i) = (-(basis.centers.rowwise() - x.samples.row(i))
                           .rowwise()
                           .squaredNorm()
                           .array() *
                      inv)
                         .exp()
                         .transpose();
    return phi;
}

Eigen::MatrixXd analytic_gram(const GaussianBasis& basis) {
    validate(basis);
    const double s2 = basis.sigma * basis.sigma;
    const double scale =
        std::pow(3.14159265358979323846 * s2, 0.5 * static_cast<double>(basis.dim()));
    const double inv = 1.0 / (4.0 * s2);
    const Eigen::Index b = basis.size();
    Eigen::MatrixXd gram(b, b);
    for (Eigen::Index l = 0; l < b; ++l) {
        gram(l, l) = scale;
        for (Eigen::Index m = l + 1; m < b; ++m) {
            const double d2 =
                (basis.centers.row(l) - basis.centers.row(m)).squaredNorm();
            gram(l, m) = gram(m, l) = scale * std::exp(-d2 * inv);
        }
    }
    return gram;
}

double median_heuristic(const Dataset& xp, const Dataset& xq) {
    validate(xp);
    validate(xq);
    if (xp.dim() != xq.dim())
        throw std::invalid_argument("datasets must share dimension");
    const Eigen::Index total = xp.n() + xq.n();
    if (total < 2) throw std::invalid_argument("need at least 2 pooled samples");

    Eigen::MatrixXd pooled(total, xp.dim());
    pooled << xp.samples, xq.samples;
    constexpr Eigen::Index kMaxExact = 1000;
    if (total > kMaxExact) {
        Rng rng(0x6d656469616eull);  // fixed subsample stream
        Eigen::MatrixXd sub(kMaxExact, pooled.cols());
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        for (Eigen::Index i = 0; i < kMaxExact; ++i) {
            const std::size_t j =
                static_cast<std::size_t>(i) +
                rng.next_below(idx.size() - static_cast<std::size_t>(i));
            std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
            sub.row(i) = pooled.row(idx[static_cast<std::size_t>(i)]);
        }
        pooled = std::move(sub);
    }

    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(pooled.rows()) *
                  (static_cast<std::size_t>(pooled.rows()) - 1) / 2);
    for (Eigen::Index i = 0; i < pooled.rows(); ++i)
        for (Eigen::Index j = i + 1; j < pooled.rows(); ++j)
            dists.push_back((pooled.row(i) - pooled.row(j)).norm());

    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid),
                     dists.end());
    double median = dists[mid];
    if (dists.size() % 2 == 0) {
        const double lower =
            *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    if (!(median > 0.0))
        throw std::runtime_error("degenerate data: median pairwise distance is 0");
    return median;
}

}  // namespace densdiff
