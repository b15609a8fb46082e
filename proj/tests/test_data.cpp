#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "densdiff/data.hpp"

using namespace densdiff;

namespace {

std::string temp_file(const std::string& contents) {
    static int counter = 0;
    const std::string path =
        "test_data_tmp_" + std::to_string(counter++) + ".csv";
    std::ofstream out(path);
    out << contents;
    return path;
}

}  // namespace

TEST_CASE("load_csv parses a plain numeric file") {
    const std::string path = temp_file("1.0,2.0\n3.0,4.0\n");
    const Dataset d = load_csv(path);
    CHECK(d.n() == 2);
    CHECK(d.dim() == 2);
    CHECK(d.samples(0, 0) == 1.0);
    CHECK(d.samples(0, 1) == 2.0);
    CHECK(d.samples(1, 0) == 3.0);
    CHECK(d.samples(1, 1) == 4.0);
    std::remove(path.c_str());
}

TEST_CASE("load_csv rejects an empty file") {
    const std::string path = temp_file("");
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("empty dataset"),
                         std::invalid_argument);
    std::remove(path.c_str());
}

TEST_CASE("load_csv names the bad cell") {
    const std::string path = temp_file("1.0,x\n");
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("row 1"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("col 2"),
                         std::invalid_argument);
    std::remove(path.c_str());
}

TEST_CASE("load_csv rejects ragged rows and non-finite cells") {
    const std::string ragged = temp_file("1,2\n3\n");
    CHECK_THROWS(load_csv(ragged));
    std::remove(ragged.c_str());
    const std::string inf = temp_file("1,inf\n");
    CHECK_THROWS(load_csv(inf));
    std::remove(inf.c_str());
    CHECK_THROWS(load_csv("no_such_file_anywhere.csv"));
}

TEST_CASE("load_csv header flag skips the first line") {
    const std::string path = temp_file("a,b\n1,2\n");
    const Dataset d = load_csv(path, ',', true);
    CHECK(d.n() == 1);
    CHECK(d.samples(0, 1) == 2.0);
    std::remove(path.c_str());
}

TEST_CASE("csv round trip preserves values exactly") {
    Eigen::MatrixXd m(2, 3);
    m << 0.1, -2.5e-13, 3.0, 1.0 / 3.0, 7.25, -0.0;
    const std::string path = "test_data_roundtrip.csv";
    save_csv(path, m);
    const Dataset d = load_csv(path);
    CHECK(d.samples == m);
    std::remove(path.c_str());
}

TEST_CASE("label files round trip and validate") {
    Eigen::VectorXi labels(3);
    labels << 1, -1, 1;
    const std::string path = "test_data_labels.csv";
    save_labels_csv(path, labels);
    CHECK(load_labels_csv(path) == labels);
    std::remove(path.c_str());
    const std::string bad = temp_file("1\n0\n");
    CHECK_THROWS(load_labels_csv(bad));
    std::remove(bad.c_str());
}

TEST_CASE("toy problem 1 spec") {
    const MixtureSpec spec = toy1_spec();
    REQUIRE(spec.components.size() == 2);
    const auto& pos = spec.components[0].label == 1 ? spec.components[0]
                                                    : spec.components[1];
    const auto& neg = spec.components[0].label == 1 ? spec.components[1]
                                                    : spec.components[0];
    CHECK(pos.mean == Eigen::Vector2d(-1.0, -1.0));
    CHECK(neg.mean == Eigen::Vector2d(1.0, 1.0));
    for (const auto& c : spec.components) {
        CHECK(c.covariance == Eigen::Matrix2d::Identity());
        CHECK(c.weight == 1.0);
    }
}

TEST_CASE("toy problem 2 spec") {
    const MixtureSpec spec = toy2_spec();
    REQUIRE(spec.components.size() == 4);
    std::set<std::pair<double, double>> pos_means, neg_means;
    double pos_weight = 0.0, neg_weight = 0.0;
    for (const auto& c : spec.components) {
        CHECK(c.covariance == Eigen::Matrix2d::Identity());
        CHECK(c.weight == 0.5);
        if (c.label == 1) {
            pos_means.insert({c.mean[0], c.mean[1]});
            pos_weight += c.weight;
        } else {
            neg_means.insert({c.mean[0], c.mean[1]});
            neg_weight += c.weight;
        }
    }
    CHECK(pos_means == std::set<std::pair<double, double>>{{3, 0}, {-3, 0}});
    CHECK(neg_means == std::set<std::pair<double, double>>{{0, 3}, {0, -3}});
    CHECK(pos_weight == 1.0);
    CHECK(neg_weight == 1.0);
}

TEST_CASE("sample_mixture is reproducible and respects its prior") {
    const MixtureSpec spec = toy1_spec();
    const LabeledDataset a = sample_mixture(spec, 30, 0.3, 7);
    const LabeledDataset b = sample_mixture(spec, 30, 0.3, 7);
    CHECK(a.n() == 30);
    CHECK(a.dim() == 2);
    CHECK(a.samples == b.samples);
    CHECK(a.labels == b.labels);
    for (Eigen::Index i = 0; i < a.n(); ++i)
        CHECK((a.labels[i] == 1 || a.labels[i] == -1));

    const LabeledDataset one = sample_mixture(spec, 1, 0.5, 11);
    CHECK(one.n() == 1);
    CHECK((one.labels[0] == 1 || one.labels[0] == -1));

    CHECK_THROWS(sample_mixture(spec, 10, 0.0, 1));
    CHECK_THROWS(sample_mixture(spec, 10, 1.0, 1));
    CHECK_THROWS(sample_mixture(spec, 0, 0.5, 1));
}

TEST_CASE("sample_mixture positive fraction tracks the prior") {
    const MixtureSpec spec = toy1_spec();
    const Eigen::Index n = 100000;
    for (const double prior : {0.3, 0.5}) {
        const LabeledDataset d = sample_mixture(spec, n, prior, 123);
        const double frac =
            (d.labels.array() == 1).cast<double>().sum() / double(n);
        // 3-sigma binomial band (also inside the spec'd 0.01 for 0.5)
        const double band =
            3.0 * std::sqrt(prior * (1.0 - prior) / double(n));
        CHECK(std::abs(frac - prior) < band);
        if (prior == 0.5) CHECK(std::abs(frac - 0.5) < 0.01);
    }
}

TEST_CASE("sample_mixture class-conditional means match the spec") {
    const MixtureSpec spec = toy1_spec();
    const LabeledDataset d = sample_mixture(spec, 50000, 0.5, 5);
    Eigen::Vector2d pos = Eigen::Vector2d::Zero(), neg = pos;
    int np = 0, nn = 0;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        if (d.labels[i] == 1) {
            pos += d.samples.row(i).transpose();
            ++np;
        } else {
            neg += d.samples.row(i).transpose();
            ++nn;
        }
    }
    CHECK((pos / np - Eigen::Vector2d(-1, -1)).norm() < 0.05);
    CHECK((neg / nn - Eigen::Vector2d(1, 1)).norm() < 0.05);
}

TEST_CASE("kfold_indices partitions the index range") {
    for (const auto [n, k] : {std::pair<Eigen::Index, int>{4, 2},
                              {5, 5},
                              {17, 3}}) {
        const auto folds = kfold_indices(n, k, 42);
        REQUIRE(folds.size() == static_cast<std::size_t>(k));
        std::set<Eigen::Index> seen;
        for (const auto& [train, val] : folds) {
            CHECK(train.size() + val.size() == static_cast<std::size_t>(n));
            for (Eigen::Index idx : val) {
                CHECK(!seen.count(idx));
                seen.insert(idx);
            }
            std::set<Eigen::Index> tr(train.begin(), train.end());
            for (Eigen::Index idx : val) CHECK(!tr.count(idx));
        }
        CHECK(seen.size() == static_cast<std::size_t>(n));
    }
}

TEST_CASE("kfold_indices is deterministic and validates k") {
    CHECK(kfold_indices(10, 3, 9) == kfold_indices(10, 3, 9));
    CHECK(kfold_indices(10, 3, 9) != kfold_indices(10, 3, 10));
    CHECK_THROWS(kfold_indices(3, 4, 0));
    CHECK_THROWS(kfold_indices(3, 1, 0));
}

TEST_CASE("hinge_example coordinate ranges") {
    const auto [sep_p, sep_q] = hinge_example(200, 200, false, 3);
    CHECK(sep_p.samples.col(0).minCoeff() >= 0.0);
    CHECK(sep_p.samples.col(0).maxCoeff() <= 5.0);
    CHECK(sep_q.samples.col(0).minCoeff() >= 5.0);
    CHECK(sep_q.samples.col(0).maxCoeff() <= 10.0);
    const auto [ov_p, ov_q] = hinge_example(200, 200, true, 3);
    CHECK(ov_q.samples.col(0).minCoeff() >= 0.0);
    CHECK(ov_q.samples.col(0).maxCoeff() <= 10.0);
    CHECK(ov_q.samples.col(0).minCoeff() < 5.0);  // actually overlaps
    CHECK(ov_p.samples == sep_p.samples);         // same seed, same X_p
}

TEST_CASE("resample_by_prior draws without replacement") {
    LabeledDataset source;
    source.samples.resize(100, 1);
    source.labels.resize(100);
    for (int i = 0; i < 100; ++i) {
        source.samples(i, 0) = i;
        source.labels[i] = i < 50 ? 1 : -1;
    }
    const LabeledDataset d = resample_by_prior(source, 40, 0.5, 21);
    CHECK(d.n() == 40);
    std::set<double> values;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        values.insert(d.samples(i, 0));
        const bool from_pos = d.samples(i, 0) < 50;
        CHECK(d.labels[i] == (from_pos ? 1 : -1));
    }
    CHECK(values.size() == 40);  // no repeats
    // demanding more of one class than exists must fail
    CHECK_THROWS(resample_by_prior(source, 100, 0.9, 5));
}

TEST_CASE("standardize_pair pools moments") {
    Dataset xp{Eigen::MatrixXd{{1.0, 5.0}, {2.0, 5.0}}};
    Dataset xq{Eigen::MatrixXd{{3.0, 5.0}, {4.0, 5.0}}};
    const auto [sp, sq] = standardize_pair(xp, xq);
    Eigen::MatrixXd pooled(4, 2);
    pooled << sp.samples, sq.samples;
    CHECK(pooled.col(0).mean() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pooled.col(0).squaredNorm() / 4.0 ==
          doctest::Approx(1.0).epsilon(1e-12));
    // constant coordinate is centered but not rescaled
    CHECK(pooled.col(1).isZero(1e-12));
}

TEST_CASE("dataset validation rejects non-finite entries") {
    Dataset bad{Eigen::MatrixXd{{1.0, std::nan("")}}};
    CHECK_THROWS(validate(bad));
    Dataset empty{Eigen::MatrixXd(0, 2)};
    CHECK_THROWS(validate(empty));
    Dataset ok{Eigen::MatrixXd{{1.0, 2.0}}};
    CHECK_NOTHROW(validate(ok));
}
