#include "densdiff/eval.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "densdiff/baselines.hpp"
#include "densdiff/dsdd.hpp"
#include "densdiff/rng.hpp"

namespace densdiff {

namespace {

long count_mismatches(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("label vector length mismatch");
    long m = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) ++m;
    return m;
}

}  // namespace

double mcr(const LabelingResult& result, const Eigen::VectorXi& truth_p,
           const Eigen::VectorXi& truth_q) {
    const long wrong = count_mismatches(result.labels_p, truth_p) +
                       count_mismatches(result.labels_q, truth_q);
    return static_cast<double>(wrong) /
           static_cast<double>(truth_p.size() + truth_q.size());
}

double mcr_split(const LabelingResult& result, const Eigen::VectorXi& truth_p,
                 const Eigen::VectorXi& truth_q) {
    return static_cast<double>(count_mismatches(result.labels_p, truth_p)) /
               static_cast<double>(truth_p.size()) +
           static_cast<double>(count_mismatches(result.labels_q, truth_q)) /
               static_cast<double>(truth_q.size());
}

double ler(const LabelingResult& result, const Eigen::VectorXi& truth_p,
           const Eigen::VectorXi& truth_q) {
    const double rate = mcr(result, truth_p, truth_q);
    return std::min(rate, 1.0 - rate);
}

double expected_random_ler(long m) {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    const double log2 = std::log(2.0);
    double sum = 0.0;
    for (long i = 0; i <= m; ++i) {
        const long winner = std::min(i, m - i);
        if (winner == 0) continue;
        const double log_binom = std::lgamma(static_cast<double>(m) + 1.0) -
                                 std::lgamma(static_cast<double>(i) + 1.0) -
                                 std::lgamma(static_cast<double>(m - i) + 1.0);
        sum += static_cast<double>(winner) *
               std::exp(log_binom - static_cast<double>(m) * log2);
    }
    return sum / static_cast<double>(m);
}

DsddSelection cross_validate_dsdd(const Dataset& xp, const Dataset& xq,
                                  const std::vector<double>& sigma_grid,
                                  const std::vector<double>& lambda_grid,
                                  int folds, std::uint64_t seed,
                                  Eigen::Index max_centers) {
    if (sigma_grid.empty() || lambda_grid.empty())
        throw std::invalid_argument("hyperparameter grids must be non-empty");
    if (static_cast<Eigen::Index>(folds) > std::min(xp.n(), xq.n()))
        throw std::invalid_argument("more folds than samples");
    const auto folds_p = kfold_indices(xp.n(), folds, derive_seed(seed, 1));
    const auto folds_q = kfold_indices(xq.n(), folds, derive_seed(seed, 2));

    DsddSelection best;
    double best_score = std::numeric_limits<double>::infinity();
    for (double sigma : sigma_grid) {
        for (double lambda : lambda_grid) {
            double score = 0.0;
            bool ok = true;
            for (int f = 0; f < folds && ok; ++f) {
                const auto& fp = folds_p[static_cast<std::size_t>(f)];
                const auto& fq = folds_q[static_cast<std::size_t>(f)];
                const Dataset tr_p = rows(xp, fp.first);
                const Dataset tr_q = rows(xq, fq.first);
                try {
                    const GaussianBasis basis =
                        build_basis(tr_p, tr_q, sigma, max_centers,
                                    derive_seed(seed, 3 + static_cast<std::uint64_t>(f)));
                    CccpConfig config;
                    config.lambda = lambda;
                    const DsddModel model = cccp_fit(tr_p, tr_q, basis, config);
                    const Eigen::VectorXd g_val_q =
                        decision_values(model, rows(xq, fq.second));
                    const Eigen::VectorXd g_val_p =
                        decision_values(model, rows(xp, fp.second));
                    double j_val = 0.0;
                    for (Eigen::Index i = 0; i < g_val_q.size(); ++i)
                        j_val += ramp(g_val_q[i]) / static_cast<double>(g_val_q.size());
                    for (Eigen::Index i = 0; i < g_val_p.size(); ++i)
                        j_val -= ramp(g_val_p[i]) / static_cast<double>(g_val_p.size());
                    score += j_val;
                } catch (const std::runtime_error&) {
                    ok = false;
                }
            }
            if (!ok) {
                best.cv_scores.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            score /= static_cast<double>(folds);
            best.cv_scores.push_back(score);
            const bool tie_smoother =
                score == best_score &&
                (sigma > best.sigma ||
                 (sigma == best.sigma && lambda > best.lambda));
            if (score < best_score || tie_smoother) {
                best_score = score;
                best.sigma = sigma;
                best.lambda = lambda;
            }
        }
    }
    if (!std::isfinite(best_score))
        throw std::runtime_error("DSDD cross-validation failed on every cell");
    return best;
}

void validate(const ExperimentConfig& config) {
    if (config.methods.empty())
        throw std::invalid_argument("config needs at least one method");
    if (config.prior_p <= 0.0 || config.prior_p >= 1.0 ||
        config.prior_q <= 0.0 || config.prior_q >= 1.0)
        throw std::invalid_argument("priors must be in (0, 1)");
    if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (config.folds < 2) throw std::invalid_argument("folds must be >= 2");
    if (config.n < 1 || config.nq < 1)
        throw std::invalid_argument("sample sizes must be >= 1");
    if (config.sigma_factors.empty() || config.lambdas.empty())
        throw std::invalid_argument("hyperparameter grids must be non-empty");
}

LabelingResult run_method(const std::string& method, const Dataset& xp,
                          const Dataset& xq, const ExperimentConfig& config,
                          std::uint64_t seed) {
    LabelingResult result;
    result.method = method;
    if (method == "dsdd") {
        const double med = median_heuristic(xp, xq);
        std::vector<double> sigma_grid;
        for (double f : config.sigma_factors) sigma_grid.push_back(f * med);
        const DsddSelection sel =
            cross_validate_dsdd(xp, xq, sigma_grid, config.lambdas,
                                config.folds, seed, config.max_centers);
        const GaussianBasis basis =
            build_basis(xp, xq, sel.sigma, config.max_centers, derive_seed(seed, 99));
        CccpConfig cccp;
        cccp.lambda = sel.lambda;
        const DsddModel model = cccp_fit(xp, xq, basis, cccp);
        result.labels_p = predict_sign(model, xp);
        result.labels_q = predict_sign(model, xq);
        result.hyperparams = {{"sigma", sel.sigma}, {"lambda", sel.lambda}};
        result.diagnostics = {
            {"iterations", static_cast<double>(model.iterations)},
            {"converged", model.converged ? 1.0 : 0.0},
            {"objective", model.objective_trace.back()}};
    } else if (method == "lsdd") {
        const double med = median_heuristic(xp, xq);
        std::vector<double> sigma_grid;
        for (double f : config.sigma_factors) sigma_grid.push_back(f * med);
        const LsddSelection sel =
            lsdd_cross_validate(xp, xq, sigma_grid, config.lambdas,
                                config.folds, seed, config.max_centers);
        const LsddModel model = lsdd_fit(xp, xq, sel.sigma, sel.lambda,
                                         config.max_centers, derive_seed(seed, 99));
        result.labels_p = lsdd_label(model, xp);
        result.labels_q = lsdd_label(model, xq);
        result.hyperparams = {{"sigma", sel.sigma}, {"lambda", sel.lambda}};
    } else if (method == "kde") {
        const double med = median_heuristic(xp, xq);
        std::vector<double> sigma_grid;
        for (double f : config.sigma_factors) sigma_grid.push_back(f * med);
        auto [lp, lq] = kde_label(xp, xq, sigma_grid);
        result.labels_p = std::move(lp);
        result.labels_q = std::move(lq);
    } else if (method == "km" || method == "sc") {
        Eigen::MatrixXd pooled(xp.n() + xq.n(), xp.dim());
        pooled << xp.samples, xq.samples;
        const Dataset all{std::move(pooled)};
        const Eigen::VectorXi clusters =
            method == "km" ? kmeans(all, 2, 10, 100, seed)
                           : spectral_cluster(all, 7, seed);
        result.labels_p.resize(xp.n());
        result.labels_q.resize(xq.n());
        for (Eigen::Index i = 0; i < xp.n(); ++i)
            result.labels_p[i] = clusters[i] == 0 ? 1 : -1;
        for (Eigen::Index i = 0; i < xq.n(); ++i)
            result.labels_q[i] = clusters[xp.n() + i] == 0 ? 1 : -1;
    } else {
        throw std::invalid_argument("unknown method: " + method);
    }
    return result;
}

namespace {

int trial_thread_count(int trials) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("DENSDIFF_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < n)
            n = static_cast<unsigned>(cap);
    }
    return static_cast<int>(std::min<unsigned>(n, static_cast<unsigned>(trials)));
}

}  // namespace

ResultTable run_benchmark(const ExperimentConfig& config,
                          const BenchmarkSource& source) {
    validate(config);
    if (!source.labeled && !source.mixture)
        throw std::invalid_argument("benchmark source is empty");

    ResultTable table;
    table.trials = config.trials;
    table.total_samples = config.n + config.nq;
    table.random_baseline_ler = expected_random_ler(table.total_samples);
    for (const auto& m : config.methods) {
        MethodSummary s;
        s.method = m;
        s.trial_lers.assign(static_cast<std::size_t>(config.trials),
                            std::numeric_limits<double>::quiet_NaN());
        s.trial_hyperparams.resize(static_cast<std::size_t>(config.trials));
        table.methods.push_back(std::move(s));
    }

    auto run_trial = [&](int t) {
        const std::uint64_t seed_t =
            derive_seed(config.seed, static_cast<std::uint64_t>(t));
        LabeledDataset dp, dq;
        if (source.labeled) {
            dp = resample_by_prior(*source.labeled, config.n, config.prior_p,
                                   derive_seed(seed_t, 0));
            dq = resample_by_prior(*source.labeled, config.nq, config.prior_q,
                                   derive_seed(seed_t, 1));
        } else {
            dp = sample_mixture(*source.mixture, config.n, config.prior_p,
                                derive_seed(seed_t, 0));
            dq = sample_mixture(*source.mixture, config.nq, config.prior_q,
                                derive_seed(seed_t, 1));
        }
        Dataset xp = dp.features();
        Dataset xq = dq.features();
        if (config.standardize) std::tie(xp, xq) = standardize_pair(xp, xq);

        for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
            try {
                const LabelingResult res =
                    run_method(config.methods[mi], xp, xq, config,
                               derive_seed(seed_t, 2 + mi));
                table.methods[mi].trial_lers[static_cast<std::size_t>(t)] =
                    ler(res, dp.labels, dq.labels);
                table.methods[mi]
                    .trial_hyperparams[static_cast<std::size_t>(t)] =
                    res.hyperparams;
            } catch (const std::exception&) {
                // failed trial stays NaN and is counted below
            }
        }
    };

    const int workers = trial_thread_count(config.trials);
    if (workers <= 1) {
        for (int t = 0; t < config.trials; ++t) run_trial(t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int t = next.fetch_add(1); t < config.trials;
                     t = next.fetch_add(1))
                    run_trial(t);
            });
        for (auto& th : pool) th.join();
    }

    for (auto& summary : table.methods) {
        double sum = 0.0, sum2 = 0.0;
        int good = 0;
        for (double v : summary.trial_lers) {
            if (std::isnan(v)) {
                ++summary.failures;
                continue;
            }
            sum += v;
            sum2 += v * v;
            ++good;
        }
        if (good > 0) {
            summary.mean_ler = sum / good;
            const double var =
                good > 1 ? (sum2 - sum * sum / good) / (good - 1) : 0.0;
            summary.std_ler = std::sqrt(std::max(0.0, var));
        } else {
            summary.mean_ler = std::numeric_limits<double>::quiet_NaN();
            summary.std_ler = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return table;
}

std::string format_table(const ResultTable& table) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "method" << std::right << std::setw(10)
        << "mean" << std::setw(10) << "std" << std::setw(10) << "failures"
        << "\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& m : table.methods)
        out << std::left << std::setw(10) << m.method << std::right
            << std::setw(10) << m.mean_ler << std::setw(10) << m.std_ler
            << std::setw(10) << m.failures << "\n";
    out << std::left << std::setw(10) << "random" << std::right << std::setw(10)
        << table.random_baseline_ler << std::setw(10) << "-" << std::setw(10)
        << "-" << "\n";
    return out.str();
}

}  // namespace densdiff
