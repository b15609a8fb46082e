#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "densdiff/basis.hpp"
#include "densdiff/data.hpp"

namespace densdiff {

// Least-squares density-difference model: f(x) ~ theta^T psi(x).
struct LsddModel {
    GaussianBasis basis;
    Eigen::VectorXd theta;
    double lambda = 0.0;
};

// Gaussian kernel density estimate with a single width.
struct KdeModel {
    Dataset samples;
    double sigma = 1.0;
};

// Closed-form solve theta = (H + lambda I)^{-1} h_hat with the analytic
// Gram matrix H.
LsddModel lsdd_fit(const Dataset& xp, const Dataset& xq, double sigma,
                   double lambda, Eigen::Index max_centers, std::uint64_t seed);

Eigen::VectorXd lsdd_values(const LsddModel& model, const Dataset& x);
Eigen::VectorXi lsdd_label(const LsddModel& model, const Dataset& x);

// Held-out estimate of the LSDD squared-loss objective, averaged over
// folds; selects (sigma, lambda), ties broken toward the smoother model.
struct LsddSelection {
    double sigma = 0.0;
    double lambda = 0.0;
};
LsddSelection lsdd_cross_validate(const Dataset& xp, const Dataset& xq,
                                  const std::vector<double>& sigma_grid,
                                  const std::vector<double>& lambda_grid,
                                  int folds, std::uint64_t seed,
                                  Eigen::Index max_centers);

KdeModel kde_fit(const Dataset& x, double sigma);

// Fully normalized mixture density (1/n) sum N(x; x_i, sigma^2 I).
double kde_density(const KdeModel& model, const Eigen::VectorXd& x);

// Least-squares cross-validation bandwidth pick over the grid.
double kde_lscv(const Dataset& x, const std::vector<double>& sigma_grid);

// Value of the LSCV criterion at one bandwidth (integral term closed
// form, leave-one-out data term).
double kde_lscv_score(const Dataset& x, double sigma);

// Labels both datasets by the sign of the difference of two KDEs with
// independently selected bandwidths; returns labels for X_p then X_q.
std::pair<Eigen::VectorXi, Eigen::VectorXi> kde_label(
    const Dataset& xp, const Dataset& xq, const std::vector<double>& sigma_grid);

// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
// within-cluster sum of squares.
Eigen::VectorXi kmeans(const Dataset& x, int k, int restarts, int max_iter,
                       std::uint64_t seed);

// Two-way normalized cut on the symmetrized unweighted kNN graph.
Eigen::VectorXi spectral_cluster(const Dataset& x, int knn, std::uint64_t seed);

}  // namespace densdiff
