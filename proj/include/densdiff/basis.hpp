#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "densdiff/data.hpp"

namespace densdiff {

// Gaussian kernel basis: phi_l(x) = exp(-|x - c_l|^2 / (2 sigma^2)).
struct GaussianBasis {
    Eigen::MatrixXd centers;  // b x d
    double sigma = 1.0;

    Eigen::Index size() const { return centers.rows(); }
    Eigen::Index dim() const { return centers.cols(); }
};

void validate(const GaussianBasis& basis);

// Centers are the concatenation of both sample sets, subsampled without
// replacement when the pooled count exceeds max_centers.
GaussianBasis build_basis(const Dataset& xp, const Dataset& xq, double sigma,
                          Eigen::Index max_centers, std::uint64_t seed);

// Design matrix with entry (i, l) = phi_l(x_i).
Eigen::MatrixXd eval_basis(const GaussianBasis& basis, const Dataset& x);

// Closed-form Gram matrix of the basis under Lebesgue measure:
// H(l, l') = (pi sigma^2)^(d/2) exp(-|c_l - c_l'|^2 / (4 sigma^2)).
Eigen::MatrixXd analytic_gram(const GaussianBasis& basis);

// Median pairwise Euclidean distance of the pooled samples; exact up to
// 1000 pooled points, seeded subsample beyond that.
double median_heuristic(const Dataset& xp, const Dataset& xq);

}  // namespace densdiff
