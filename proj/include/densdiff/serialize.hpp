#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "densdiff/baselines.hpp"
#include "densdiff/dsdd.hpp"
#include "densdiff/eval.hpp"

namespace densdiff {

// Kernel expansion shared by DSDD and LSDD models on disk:
// {type, sigma, centers, alpha, lambda}.
struct SerializedModel {
    std::string type;  // "dsdd" or "lsdd"
    GaussianBasis basis;
    Eigen::VectorXd coefficients;
    double lambda = 0.0;
};

nlohmann::json model_to_json(const SerializedModel& model);
SerializedModel model_from_json(const nlohmann::json& j);

SerializedModel serialize(const DsddModel& model);
SerializedModel serialize(const LsddModel& model);

void save_model(const std::string& path, const SerializedModel& model);
SerializedModel load_model(const std::string& path);

nlohmann::json table_to_json(const ResultTable& table);

// Experiment configuration on disk; unknown keys are rejected.
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

// SHA-256 hex digest of a file's bytes.
std::string file_digest(const std::string& path);

// Run manifest: the exact argv plus input digests; replaying the argv
// reproduces the outputs byte for byte.
nlohmann::json make_manifest(const std::string& command,
                             const std::vector<std::string>& argv,
                             const std::vector<std::string>& input_files);
void save_json(const std::string& path, const nlohmann::json& j);
nlohmann::json load_json(const std::string& path);

}  // namespace densdiff
