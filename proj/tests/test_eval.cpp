#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "densdiff/basis.hpp"
#include "densdiff/eval.hpp"

using namespace densdiff;

namespace {

LabelingResult make_result(std::initializer_list<int> p,
                           std::initializer_list<int> q) {
    LabelingResult r;
    r.labels_p.resize(static_cast<Eigen::Index>(p.size()));
    r.labels_q.resize(static_cast<Eigen::Index>(q.size()));
    Eigen::Index i = 0;
    for (int v : p) r.labels_p[i++] = v;
    i = 0;
    for (int v : q) r.labels_q[i++] = v;
    return r;
}

Eigen::VectorXi labels(std::initializer_list<int> v) {
    Eigen::VectorXi out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (int x : v) out[i++] = x;
    return out;
}

// Exact mean LER of a uniformly random labeling, by enumerating all 2^m
// equiprobable labelings against a fixed truth.
double enumerate_random_ler(int m) {
    double total = 0.0;
    for (std::uint64_t mask = 0; mask < (1ull << m); ++mask) {
        const int wrong = m - __builtin_popcountll(mask);
        total += std::min(wrong, m - wrong);
    }
    return total / (std::pow(2.0, m) * m);
}

}  // namespace

TEST_CASE("mcr pooled counting") {
    const auto truth_p = labels({1, 1});
    const auto truth_q = labels({-1, -1});
    CHECK(mcr(make_result({1, 1}, {-1, -1}), truth_p, truth_q) == 0.0);
    CHECK(mcr(make_result({-1, -1}, {1, 1}), truth_p, truth_q) == 1.0);
    CHECK(mcr(make_result({1, -1}, {-1, -1}), truth_p, truth_q) == 0.25);
    CHECK_THROWS(mcr(make_result({1}, {-1, -1}), truth_p, truth_q));
}

TEST_CASE("mcr_split is the sum of per-dataset rates") {
    const auto truth_p = labels({1, 1});
    const auto truth_q = labels({-1, -1});
    // one of two wrong on each side: 0.5 + 0.5 (can reach 2.0 overall)
    CHECK(mcr_split(make_result({-1, 1}, {1, -1}), truth_p, truth_q) == 1.0);
    CHECK(mcr_split(make_result({-1, -1}, {1, 1}), truth_p, truth_q) == 2.0);
}

TEST_CASE("ler is swap invariant") {
    const auto truth_p = labels({1, 1});
    const auto truth_q = labels({-1, -1});
    CHECK(ler(make_result({-1, -1}, {1, 1}), truth_p, truth_q) == 0.0);
    CHECK(ler(make_result({1, 1}, {-1, -1}), truth_p, truth_q) == 0.0);
    CHECK(ler(make_result({1, -1}, {-1, -1}), truth_p, truth_q) == 0.25);
}

TEST_CASE("expected_random_ler reference constants") {
    CHECK(std::round(expected_random_ler(40) * 1000.0) / 1000.0 == 0.437);
    CHECK(std::round(expected_random_ler(60) * 1000.0) / 1000.0 == 0.449);
    CHECK(std::round(expected_random_ler(80) * 1000.0) / 1000.0 == 0.456);
}

TEST_CASE("expected_random_ler small exact values") {
    CHECK(expected_random_ler(1) == 0.0);
    CHECK(expected_random_ler(2) == doctest::Approx(0.25).epsilon(1e-15));
    for (int m = 1; m <= 12; ++m)
        CHECK(expected_random_ler(m) ==
              doctest::Approx(enumerate_random_ler(m)).epsilon(1e-13));
    CHECK_THROWS(expected_random_ler(0));
}

TEST_CASE("expected_random_ler grows toward one half") {
    double prev = 0.0;
    for (int m = 2; m <= 100; m += 2) {
        const double v = expected_random_ler(m);
        CHECK(v > prev);
        CHECK(v < 0.5);
        prev = v;
    }
}

TEST_CASE("cross_validate_dsdd single cell and table shape") {
    const LabeledDataset dp = sample_mixture(toy1_spec(), 20, 0.3, 60);
    const LabeledDataset dq = sample_mixture(toy1_spec(), 20, 0.7, 61);
    const Dataset xp = dp.features(), xq = dq.features();
    const DsddSelection single =
        cross_validate_dsdd(xp, xq, {0.8}, {0.05}, 3, 62);
    CHECK(single.sigma == 0.8);
    CHECK(single.lambda == 0.05);
    CHECK(single.cv_scores.size() == 1);

    const DsddSelection multi =
        cross_validate_dsdd(xp, xq, {0.5, 1.0}, {0.01, 0.1, 1.0}, 3, 62);
    CHECK(multi.cv_scores.size() == 6);
    CHECK_THROWS(cross_validate_dsdd(xp, xq, {}, {0.1}, 3, 0));
}

TEST_CASE("cross_validate_dsdd avoids the overfitting bandwidth") {
    const LabeledDataset dp = sample_mixture(toy1_spec(), 40, 0.2, 63);
    const LabeledDataset dq = sample_mixture(toy1_spec(), 40, 0.8, 64);
    const Dataset xp = dp.features(), xq = dq.features();
    const double med = median_heuristic(xp, xq);
    std::vector<double> sigmas;
    for (double f : {0.1, 0.5, 1.0, 2.0, 5.0}) sigmas.push_back(f * med);
    const DsddSelection sel =
        cross_validate_dsdd(xp, xq, sigmas, {0.1}, 5, 65);
    CHECK(sel.sigma != sigmas.front());
}

TEST_CASE("config validation") {
    ExperimentConfig config;
    config.methods = {"km"};
    CHECK_NOTHROW(validate(config));
    config.trials = 0;
    CHECK_THROWS(validate(config));
    config.trials = 1;
    config.prior_p = 1.5;
    CHECK_THROWS(validate(config));
    config.prior_p = 0.2;
    config.folds = 1;
    CHECK_THROWS(validate(config));
}

TEST_CASE("run_method rejects unknown methods") {
    const Dataset x{Eigen::MatrixXd{{0.0}, {1.0}}};
    ExperimentConfig config;
    CHECK_THROWS_AS(run_method("smic", x, x, config, 0),
                    std::invalid_argument);
}

TEST_CASE("run_benchmark on separated blobs with kmeans") {
    MixtureSpec spec;
    MixtureComponent pos, neg;
    pos.mean = Eigen::Vector2d(-20.0, 0.0);
    neg.mean = Eigen::Vector2d(20.0, 0.0);
    pos.covariance = neg.covariance = Eigen::Matrix2d::Identity();
    pos.weight = neg.weight = 1.0;
    pos.label = 1;
    neg.label = -1;
    spec.components = {pos, neg};

    ExperimentConfig config;
    config.methods = {"km"};
    config.trials = 1;
    config.n = config.nq = 20;
    config.seed = 70;
    BenchmarkSource source;
    source.mixture = spec;
    const ResultTable table = run_benchmark(config, source);
    REQUIRE(table.methods.size() == 1);
    CHECK(table.methods[0].method == "km");
    CHECK(table.methods[0].mean_ler == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(table.methods[0].failures == 0);
    CHECK(table.random_baseline_ler ==
          doctest::Approx(expected_random_ler(40)).epsilon(1e-15));
    CHECK(table.methods[0].mean_ler >= 0.0);
    CHECK(table.methods[0].mean_ler <= 0.5);

    const std::string text = format_table(table);
    CHECK(text.find("random") != std::string::npos);
    CHECK(text.find("km") != std::string::npos);
}

TEST_CASE("run_benchmark is deterministic") {
    ExperimentConfig config;
    config.methods = {"km", "kde"};
    config.trials = 3;
    config.n = config.nq = 25;
    config.seed = 71;
    BenchmarkSource source;
    source.mixture = toy1_spec();
    const ResultTable a = run_benchmark(config, source);
    const ResultTable b = run_benchmark(config, source);
    REQUIRE(a.methods.size() == b.methods.size());
    for (std::size_t i = 0; i < a.methods.size(); ++i) {
        CHECK(a.methods[i].trial_lers == b.methods[i].trial_lers);
        CHECK(a.methods[i].mean_ler == b.methods[i].mean_ler);
        CHECK(a.methods[i].std_ler == b.methods[i].std_ler);
    }
    CHECK(format_table(a) == format_table(b));
}

TEST_CASE("run_benchmark resamples finite labeled sources") {
    LabeledDataset source_data;
    source_data.samples.resize(200, 1);
    source_data.labels.resize(200);
    for (int i = 0; i < 200; ++i) {
        source_data.samples(i, 0) = i < 100 ? -30.0 + 0.01 * i : 30.0 + 0.01 * i;
        source_data.labels[i] = i < 100 ? 1 : -1;
    }
    ExperimentConfig config;
    config.methods = {"km"};
    config.trials = 2;
    config.n = config.nq = 20;
    config.prior_p = 0.3;
    config.prior_q = 0.7;
    config.seed = 72;
    BenchmarkSource source;
    source.labeled = source_data;
    const ResultTable table = run_benchmark(config, source);
    CHECK(table.methods[0].mean_ler == doctest::Approx(0.0).epsilon(1e-12));
}
