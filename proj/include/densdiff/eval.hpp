#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "densdiff/data.hpp"

namespace densdiff {

// Labels assigned to both datasets by one method, with diagnostics.
struct LabelingResult {
    Eigen::VectorXi labels_p;
    Eigen::VectorXi labels_q;
    std::string method;
    std::map<std::string, double> hyperparams;
    std::map<std::string, double> diagnostics;
};

// Pooled misclassification rate over n + n' samples.
double mcr(const LabelingResult& result, const Eigen::VectorXi& truth_p,
           const Eigen::VectorXi& truth_q);

// Sum of the two per-dataset error rates (can exceed 1); exposed as a
// diagnostic only.
double mcr_split(const LabelingResult& result, const Eigen::VectorXi& truth_p,
                 const Eigen::VectorXi& truth_q);

// Labeling error rate min(MCR, 1 - MCR), invariant to label swap.
double ler(const LabelingResult& result, const Eigen::VectorXi& truth_p,
           const Eigen::VectorXi& truth_q);

// Mean LER of a uniformly random labeling of m samples:
// (1 / (2^m m)) sum_i min(i, m - i) C(m, i), evaluated in the log domain.
double expected_random_ler(long m);

struct DsddSelection {
    double sigma = 0.0;
    double lambda = 0.0;
    // score per grid cell, row-major over (sigma, lambda)
    std::vector<double> cv_scores;
};

// Selects (sigma, lambda) by k-fold CV on the unregularized held-out
// ramp objective; ties prefer the smoother model (larger sigma, then
// larger lambda).
DsddSelection cross_validate_dsdd(const Dataset& xp, const Dataset& xq,
                                  const std::vector<double>& sigma_grid,
                                  const std::vector<double>& lambda_grid,
                                  int folds, std::uint64_t seed,
                                  Eigen::Index max_centers = 200);

struct ExperimentConfig {
    std::vector<std::string> methods;  // dsdd, lsdd, kde, km, sc
    double prior_p = 0.2;
    double prior_q = 0.8;
    Eigen::Index n = 40;
    Eigen::Index nq = 40;
    int trials = 1;
    std::uint64_t seed = 0;
    std::vector<double> sigma_factors = {0.1, 0.2, 0.5, 1.0, 2.0, 5.0};
    std::vector<double> lambdas = {1e-3, 1e-2, 1e-1, 1.0};
    int folds = 5;
    Eigen::Index max_centers = 200;
    bool standardize = true;
};

void validate(const ExperimentConfig& config);

struct MethodSummary {
    std::string method;
    std::vector<double> trial_lers;  // NaN for failed trials
    std::vector<std::map<std::string, double>> trial_hyperparams;
    double mean_ler = 0.0;
    double std_ler = 0.0;
    int failures = 0;
};

struct ResultTable {
    std::vector<MethodSummary> methods;
    double random_baseline_ler = 0.0;
    Eigen::Index total_samples = 0;
    int trials = 0;
};

// Source of labeled data for the benchmark: either a finite labeled
// dataset (resampled without replacement) or a mixture (fresh draws).
struct BenchmarkSource {
    std::optional<LabeledDataset> labeled;
    std::optional<MixtureSpec> mixture;
};

ResultTable run_benchmark(const ExperimentConfig& config,
                          const BenchmarkSource& source);

// Runs one named method on a prepared pair; throws on failure.
LabelingResult run_method(const std::string& method, const Dataset& xp,
                          const Dataset& xq, const ExperimentConfig& config,
                          std::uint64_t seed);

std::string format_table(const ResultTable& table);

}  // namespace densdiff
