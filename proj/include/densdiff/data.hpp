#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace densdiff {

// A set of unlabeled samples, one row per sample.
struct Dataset {
    Eigen::MatrixXd samples;

    Eigen::Index n() const { return samples.rows(); }
    Eigen::Index dim() const { return samples.cols(); }
};

// Samples with ground-truth labels in {-1, +1}; labels are used for
// evaluation only, never by the labeling methods themselves.
struct LabeledDataset {
    Eigen::MatrixXd samples;
    Eigen::VectorXi labels;

    Eigen::Index n() const { return samples.rows(); }
    Eigen::Index dim() const { return samples.cols(); }
    Dataset features() const { return Dataset{samples}; }
};

// One Gaussian component of a class-conditional mixture.
struct MixtureComponent {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    double weight;
    int label;  // -1 or +1
};

struct MixtureSpec {
    std::vector<MixtureComponent> components;

    Eigen::Index dim() const {
        return components.empty() ? 0 : components.front().mean.size();
    }
};

void validate(const Dataset& data);
void validate(const MixtureSpec& spec);

// Reads a headerless numeric CSV; every row must have the same number of
// finite cells. Errors name the offending row and column (1-based).
Dataset load_csv(const std::string& path, char delimiter = ',',
                 bool skip_header = false);

// Single-column file of -1/+1 labels.
Eigen::VectorXi load_labels_csv(const std::string& path,
                                bool skip_header = false);

void save_csv(const std::string& path, const Eigen::MatrixXd& values,
              char delimiter = ',');
void save_labels_csv(const std::string& path, const Eigen::VectorXi& labels);

// Draws n samples: class by Bernoulli(prior_pos), component by the
// within-class weights, then a Gaussian draw through the Cholesky factor
// of the covariance. Bit-reproducible for a fixed seed.
LabeledDataset sample_mixture(const MixtureSpec& spec, Eigen::Index n,
                              double prior_pos, std::uint64_t seed);

// Class-conditional densities of the two 2-d toy problems.
MixtureSpec toy1_spec();
MixtureSpec toy2_spec();

// Uniform-coordinate pair used to contrast ramp and hinge solutions:
// coordinate 0 is U(0,5) for X_p and either U(5,10) (separated) or
// U(0,10) (overlapping) for X_q; coordinate 1 is N(0,1) for both.
std::pair<Dataset, Dataset> hinge_example(Eigen::Index n, Eigen::Index nq,
                                          bool overlapping,
                                          std::uint64_t seed);

using FoldSplit = std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>>;

// Seeded random partition into k folds; every index lands in exactly one
// validation set.
std::vector<FoldSplit> kfold_indices(Eigen::Index n, int k, std::uint64_t seed);

// Draws n rows without replacement whose class composition follows
// Binomial(n, prior_pos); errors if either class runs short.
LabeledDataset resample_by_prior(const LabeledDataset& source, Eigen::Index n,
                                 double prior_pos, std::uint64_t seed);

Dataset rows(const Dataset& data, const std::vector<Eigen::Index>& idx);

// Per-coordinate zero mean / unit variance over the pooled pair; a
// constant coordinate is left centered only.
std::pair<Dataset, Dataset> standardize_pair(const Dataset& xp,
                                             const Dataset& xq);

}  // namespace densdiff
