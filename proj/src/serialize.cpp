#include "densdiff/serialize.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace densdiff {

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty())
        throw std::invalid_argument("expected a non-empty array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw std::invalid_argument("ragged rows in matrix JSON");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

void reject_unknown(const nlohmann::json& j,
                    const std::vector<std::string>& known) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool found = false;
        for (const auto& k : known)
            if (key == k) found = true;
        if (!found)
            throw std::invalid_argument("unknown config field: /" + key);
    }
}

}  // namespace

nlohmann::json model_to_json(const SerializedModel& model) {
    nlohmann::json j;
    j["type"] = model.type;
    j["sigma"] = model.basis.sigma;
    j["centers"] = matrix_to_json(model.basis.centers);
    j["alpha"] = std::vector<double>(
        model.coefficients.data(),
        model.coefficients.data() + model.coefficients.size());
    j["lambda"] = model.lambda;
    return j;
}

SerializedModel model_from_json(const nlohmann::json& j) {
    SerializedModel model;
    model.type = j.value("type", "dsdd");
    model.basis.sigma = j.at("sigma").get<double>();
    model.basis.centers = matrix_from_json(j.at("centers"));
    const auto alpha = j.at("alpha").get<std::vector<double>>();
    model.coefficients = Eigen::Map<const Eigen::VectorXd>(
        alpha.data(), static_cast<Eigen::Index>(alpha.size()));
    model.lambda = j.at("lambda").get<double>();
    if (model.coefficients.size() != model.basis.size())
        throw std::invalid_argument("alpha length does not match centers");
    validate(model.basis);
    return model;
}

SerializedModel serialize(const DsddModel& model) {
    return {"dsdd", model.basis, model.alpha, model.lambda};
}

SerializedModel serialize(const LsddModel& model) {
    return {"lsdd", model.basis, model.theta, model.lambda};
}

void save_model(const std::string& path, const SerializedModel& model) {
    save_json(path, model_to_json(model));
}

SerializedModel load_model(const std::string& path) {
    return model_from_json(load_json(path));
}

nlohmann::json table_to_json(const ResultTable& table) {
    nlohmann::json j;
    j["trials"] = table.trials;
    j["total_samples"] = table.total_samples;
    j["random_baseline_ler"] = table.random_baseline_ler;
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& m : table.methods) {
        nlohmann::json mj;
        mj["method"] = m.method;
        mj["mean_ler"] = m.mean_ler;
        mj["std_ler"] = m.std_ler;
        mj["failures"] = m.failures;
        nlohmann::json lers = nlohmann::json::array();
        for (double v : m.trial_lers)
            lers.push_back(std::isnan(v) ? nlohmann::json() : nlohmann::json(v));
        mj["trial_lers"] = std::move(lers);
        nlohmann::json hp = nlohmann::json::array();
        for (const auto& t : m.trial_hyperparams) hp.push_back(t);
        mj["trial_hyperparams"] = std::move(hp);
        methods.push_back(std::move(mj));
    }
    j["methods"] = std::move(methods);
    return j;
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["methods"] = config.methods;
    j["prior_p"] = config.prior_p;
    j["prior_q"] = config.prior_q;
    j["n"] = config.n;
    j["nq"] = config.nq;
    j["trials"] = config.trials;
    j["seed"] = config.seed;
    j["sigma_factors"] = config.sigma_factors;
    j["lambdas"] = config.lambdas;
    j["folds"] = config.folds;
    j["max_centers"] = config.max_centers;
    j["standardize"] = config.standardize;
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"schema_version", "methods", "prior_p", "prior_q", "n",
                       "nq", "trials", "seed", "sigma_factors", "lambdas",
                       "folds", "max_centers", "standardize"});
    if (j.value("schema_version", 0) != 1)
        throw std::invalid_argument("/schema_version: expected 1");
    ExperimentConfig config;
    config.methods = j.at("methods").get<std::vector<std::string>>();
    config.prior_p = j.value("prior_p", config.prior_p);
    config.prior_q = j.value("prior_q", config.prior_q);
    config.n = j.value("n", config.n);
    config.nq = j.value("nq", config.nq);
    config.trials = j.value("trials", config.trials);
    config.seed = j.value("seed", config.seed);
    if (j.contains("sigma_factors"))
        config.sigma_factors = j.at("sigma_factors").get<std::vector<double>>();
    if (j.contains("lambdas"))
        config.lambdas = j.at("lambdas").get<std::vector<double>>();
    config.folds = j.value("folds", config.folds);
    config.max_centers = j.value("max_centers", config.max_centers);
    config.standardize = j.value("standardize", config.standardize);
    validate(config);
    return config;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for digest: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 15];
    while (in) {
        in.read(buf, sizeof(buf));
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

nlohmann::json make_manifest(const std::string& command,
                             const std::vector<std::string>& argv,
                             const std::vector<std::string>& input_files) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["tool"] = "densdiff";
    j["version"] = "0.1.0";
    j["command"] = command;
    j["argv"] = argv;
    nlohmann::json digests = nlohmann::json::object();
    for (const auto& f : input_files) digests[f] = file_digest(f);
    j["input_digests"] = std::move(digests);
    return j;
}

void save_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return nlohmann::json::parse(in);
}

}  // namespace densdiff
