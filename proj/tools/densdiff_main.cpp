#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "densdiff/baselines.hpp"
#include "densdiff/dsdd.hpp"
#include "densdiff/eval.hpp"
#include "densdiff/rng.hpp"
#include "densdiff/serialize.hpp"

namespace {

using namespace densdiff;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct LabelArgs {
    std::string xp_path, xq_path, method, out = "labels.txt";
    double sigma = 0.0, lambda = 0.0;
    bool sigma_set = false, lambda_set = false, header = false;
    std::uint64_t seed = 0;
    int folds = 5;
    Eigen::Index max_centers = 200;
};

void write_labels(const std::string& path, const Eigen::VectorXi& labels_p,
                  const Eigen::VectorXi& labels_q) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (Eigen::Index i = 0; i < labels_p.size(); ++i) out << labels_p[i] << '\n';
    out << "---\n";
    for (Eigen::Index i = 0; i < labels_q.size(); ++i) out << labels_q[i] << '\n';
}

int cmd_label(const LabelArgs& args, const std::vector<std::string>& argv) {
    Dataset xp, xq;
    try {
        xp = load_csv(args.xp_path, ',', args.header);
        xq = load_csv(args.xq_path, ',', args.header);
        if (xp.dim() != xq.dim())
            throw std::invalid_argument("datasets must share dimension");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        // Fit in standardized coordinates; record the transform so the
        // saved model's frame can be mapped back to the input space.
        Eigen::MatrixXd pooled(xp.n() + xq.n(), xp.dim());
        pooled << xp.samples, xq.samples;
        const Eigen::RowVectorXd center = pooled.colwise().mean();
        const Eigen::RowVectorXd scale =
            ((pooled.rowwise() - center).array().square().colwise().sum() /
             static_cast<double>(pooled.rows()))
                .sqrt();
        std::tie(xp, xq) = standardize_pair(xp, xq);
        ExperimentConfig grids;
        grids.folds = args.folds;
        grids.max_centers = args.max_centers;

        LabelingResult result;
        std::optional<SerializedModel> model_out;
        if (args.method == "dsdd") {
            double sigma = args.sigma, lambda = args.lambda;
            if (!args.sigma_set || !args.lambda_set) {
                const double med = median_heuristic(xp, xq);
                std::vector<double> sigma_grid;
                if (args.sigma_set) {
                    sigma_grid = {args.sigma};
                } else {
                    for (double f : grids.sigma_factors)
                        sigma_grid.push_back(f * med);
                }
                const std::vector<double> lambda_grid =
                    args.lambda_set ? std::vector<double>{args.lambda}
                                    : grids.lambdas;
                const DsddSelection sel =
                    cross_validate_dsdd(xp, xq, sigma_grid, lambda_grid,
                                        args.folds, args.seed, args.max_centers);
                sigma = sel.sigma;
                lambda = sel.lambda;
            }
            const GaussianBasis basis = build_basis(
                xp, xq, sigma, args.max_centers, derive_seed(args.seed, 99));
            CccpConfig cccp;
            cccp.lambda = lambda;
            const DsddModel model = cccp_fit(xp, xq, basis, cccp);
            result.labels_p = predict_sign(model, xp);
            result.labels_q = predict_sign(model, xq);
            result.hyperparams = {{"sigma", sigma}, {"lambda", lambda}};
            result.diagnostics = {
                {"iterations", static_cast<double>(model.iterations)},
                {"converged", model.converged ? 1.0 : 0.0},
                {"objective", model.objective_trace.back()}};
            model_out = serialize(model);
        } else if (args.method == "lsdd") {
            double sigma = args.sigma, lambda = args.lambda;
            if (!args.sigma_set || !args.lambda_set) {
                const double med = median_heuristic(xp, xq);
                std::vector<double> sigma_grid;
                if (args.sigma_set) {
                    sigma_grid = {args.sigma};
                } else {
                    for (double f : grids.sigma_factors)
                        sigma_grid.push_back(f * med);
                }
                const std::vector<double> lambda_grid =
                    args.lambda_set ? std::vector<double>{args.lambda}
                                    : grids.lambdas;
                const LsddSelection sel = lsdd_cross_validate(
                    xp, xq, sigma_grid, lambda_grid, args.folds, args.seed,
                    args.max_centers);
                sigma = sel.sigma;
                lambda = sel.lambda;
            }
            const LsddModel model = lsdd_fit(xp, xq, sigma, lambda,
                                             args.max_centers,
                                             derive_seed(args.seed, 99));
            result.labels_p = lsdd_label(model, xp);
            result.labels_q = lsdd_label(model, xq);
            result.hyperparams = {{"sigma", sigma}, {"lambda", lambda}};
            model_out = serialize(model);
        } else if (args.method == "kde") {
            const double med = median_heuristic(xp, xq);
            std::vector<double> sigma_grid;
            if (args.sigma_set) {
                sigma_grid = {args.sigma};
            } else {
                for (double f : grids.sigma_factors) sigma_grid.push_back(f * med);
            }
            auto [lp, lq] = kde_label(xp, xq, sigma_grid);
            result.labels_p = std::move(lp);
            result.labels_q = std::move(lq);
        } else {
            std::cerr << "error: unknown method: " << args.method << "\n";
            return kExitUsage;
        }

        write_labels(args.out, result.labels_p, result.labels_q);
        nlohmann::json diag;
        diag["method"] = args.method;
        diag["hyperparams"] = result.hyperparams;
        diag["diagnostics"] = result.diagnostics;
        diag["standardization"] = {
            {"center", std::vector<double>(center.data(),
                                           center.data() + center.size())},
            {"scale", std::vector<double>(scale.data(),
                                          scale.data() + scale.size())}};
        save_json(args.out + ".diagnostics.json", diag);
        if (model_out) save_model(args.out + ".model.json", *model_out);
        save_json(args.out + ".manifest.json",
                  make_manifest("label", argv, {args.xp_path, args.xq_path}));
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}

struct ToyArgs {
    std::string problem;
    Eigen::Index n = 30, nq = 30;
    double prior_p = 0.3, prior_q = 0.7;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
};

int cmd_toy(const ToyArgs& args, const std::vector<std::string>& argv) {
    try {
        std::filesystem::create_directories(args.out_dir);
        const auto path = [&](const std::string& name) {
            return (std::filesystem::path(args.out_dir) / name).string();
        };
        if (args.problem == "1" || args.problem == "2") {
            const MixtureSpec spec =
                args.problem == "1" ? toy1_spec() : toy2_spec();
            const LabeledDataset dp = sample_mixture(
                spec, args.n, args.prior_p, derive_seed(args.seed, 0));
            const LabeledDataset dq = sample_mixture(
                spec, args.nq, args.prior_q, derive_seed(args.seed, 1));
            save_csv(path("xp.csv"), dp.samples);
            save_csv(path("xq.csv"), dq.samples);
            save_labels_csv(path("yp.csv"), dp.labels);
            save_labels_csv(path("yq.csv"), dq.labels);
        } else if (args.problem == "hinge") {
            for (bool overlapping : {false, true}) {
                const std::string prefix =
                    overlapping ? "overlap_" : "separated_";
                auto [xp, xq] =
                    hinge_example(args.n, args.nq, overlapping, args.seed);
                save_csv(path(prefix + "xp.csv"), xp.samples);
                save_csv(path(prefix + "xq.csv"), xq.samples);
                // truth is membership: X_p positive, X_q negative
                save_labels_csv(path(prefix + "yp.csv"),
                                Eigen::VectorXi::Constant(args.n, 1));
                save_labels_csv(path(prefix + "yq.csv"),
                                Eigen::VectorXi::Constant(args.nq, -1));
            }
        } else {
            std::cerr << "error: unknown problem: " << args.problem << "\n";
            return kExitUsage;
        }
        save_json(path("manifest.json"), make_manifest("toy", argv, {}));
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

struct BenchArgs {
    std::string config_path;
    std::string out;
    std::string problem = "1";
    std::string features_path, labels_path;
    std::string methods = "dsdd,lsdd,kde,km,sc";
    double prior_p = 0.2, prior_q = 0.8;
    Eigen::Index n = 40, nq = 40;
    int trials = 5, folds = 5;
    std::uint64_t seed = 0;
};

int cmd_bench(const BenchArgs& args, const std::vector<std::string>& argv) {
    ExperimentConfig config;
    BenchmarkSource source;
    std::vector<std::string> inputs;
    try {
        if (!args.config_path.empty()) {
            config = config_from_json(load_json(args.config_path));
            inputs.push_back(args.config_path);
        } else {
            config.methods.clear();
            std::string token;
            std::istringstream ss(args.methods);
            while (std::getline(ss, token, ','))
                if (!token.empty()) config.methods.push_back(token);
            config.prior_p = args.prior_p;
            config.prior_q = args.prior_q;
            config.n = args.n;
            config.nq = args.nq;
            config.trials = args.trials;
            config.folds = args.folds;
            config.seed = args.seed;
            validate(config);
        }
        if (!args.features_path.empty()) {
            if (args.labels_path.empty())
                throw std::invalid_argument(
                    "--labels is required with --features");
            LabeledDataset source_data;
            const Dataset feats = load_csv(args.features_path);
            source_data.samples = feats.samples;
            source_data.labels = load_labels_csv(args.labels_path);
            if (source_data.labels.size() != source_data.samples.rows())
                throw std::invalid_argument(
                    "label count does not match feature rows");
            source.labeled = std::move(source_data);
            inputs.push_back(args.features_path);
            inputs.push_back(args.labels_path);
        } else {
            source.mixture = args.problem == "2" ? toy2_spec() : toy1_spec();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        const ResultTable table = run_benchmark(config, source);
        std::cout << format_table(table);
        if (!args.out.empty()) {
            nlohmann::json j = table_to_json(table);
            j["config"] = config_to_json(config);
            save_json(args.out, j);
            save_json(args.out + ".manifest.json",
                      make_manifest("bench", argv, inputs));
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}

struct BoundaryArgs {
    std::string model_path;
    std::string grid;
    std::string out = "boundary.csv";
};

int cmd_boundary(const BoundaryArgs& args, const std::vector<std::string>& argv) {
    try {
        const SerializedModel model = load_model(args.model_path);
        if (model.basis.dim() != 2)
            throw std::invalid_argument("boundary grids require d = 2 models");
        double xmin, xmax, ymin, ymax;
        long steps;
        {
            std::istringstream ss(args.grid);
            char comma;
            if (!(ss >> xmin >> comma >> xmax >> comma >> ymin >> comma >>
                  ymax >> comma >> steps) ||
                steps < 1)
                throw std::invalid_argument(
                    "--grid must be xmin,xmax,ymin,ymax,steps");
        }
        std::ofstream out(args.out);
        if (!out) throw std::runtime_error("cannot write file: " + args.out);
        out.precision(17);
        out << "x1,x2,g,sign\n";
        for (long iy = 0; iy < steps; ++iy) {
            for (long ix = 0; ix < steps; ++ix) {
                const double x1 =
                    steps == 1 ? xmin
                               : xmin + (xmax - xmin) * static_cast<double>(ix) /
                                            static_cast<double>(steps - 1);
                const double x2 =
                    steps == 1 ? ymin
                               : ymin + (ymax - ymin) * static_cast<double>(iy) /
                                            static_cast<double>(steps - 1);
                Eigen::MatrixXd point(1, 2);
                point << x1, x2;
                const GaussianBasis& basis = model.basis;
                const double g =
                    (eval_basis(basis, Dataset{point}) * model.coefficients)(0);
                out << x1 << ',' << x2 << ',' << g << ',' << (g >= 0.0 ? 1 : -1)
                    << '\n';
            }
        }
        save_json(args.out + ".manifest.json",
                  make_manifest("boundary", argv, {args.model_path}));
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int dispatch(const std::vector<std::string>& argv);

int cmd_replay(const std::string& manifest_path) {
    try {
        const nlohmann::json manifest = load_json(manifest_path);
        const auto argv = manifest.at("argv").get<std::vector<std::string>>();
        return dispatch(argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int dispatch(const std::vector<std::string>& argv) {
    CLI::App app{"Unsupervised binary labeling of two datasets with "
                 "different class balances"};
    app.require_subcommand(1);

    LabelArgs label_args;
    auto* label = app.add_subcommand(
        "label", "Label two feature CSVs by a density-difference method");
    label->add_option("--xp", label_args.xp_path, "features of X_p")->required();
    label->add_option("--xq", label_args.xq_path, "features of X_p'")->required();
    label->add_option("--method", label_args.method, "dsdd|lsdd|kde")->required();
    auto* sig = label->add_option("--sigma", label_args.sigma, "kernel width");
    auto* lam = label->add_option("--lambda", label_args.lambda, "ridge weight");
    label->add_option("--out", label_args.out, "output label file");
    label->add_option("--seed", label_args.seed, "random seed");
    label->add_option("--folds", label_args.folds, "CV folds");
    label->add_option("--max-centers", label_args.max_centers, "basis cap");
    label->add_flag("--header", label_args.header, "skip first CSV line");

    ToyArgs toy_args;
    auto* toy = app.add_subcommand("toy", "Generate toy-problem datasets");
    toy->add_option("--problem", toy_args.problem, "1|2|hinge")->required();
    toy->add_option("--n", toy_args.n, "size of X_p");
    toy->add_option("--nq", toy_args.nq, "size of X_p'");
    toy->add_option("--prior-p", toy_args.prior_p, "p(y=1) for X_p")
        ->check(CLI::Range(0.0, 1.0).description("(0,1)"));
    toy->add_option("--prior-q", toy_args.prior_q, "p(y=1) for X_p'")
        ->check(CLI::Range(0.0, 1.0).description("(0,1)"));
    toy->add_option("--seed", toy_args.seed, "random seed");
    toy->add_option("--out-dir", toy_args.out_dir, "output directory");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Run the labeling benchmark");
    bench->add_option("--config", bench_args.config_path, "JSON config");
    bench->add_option("--out", bench_args.out, "result JSON path");
    bench->add_option("--problem", bench_args.problem,
                      "synthetic source, 1|2 (ignored with --features)");
    bench->add_option("--features", bench_args.features_path,
                      "labeled source features CSV");
    bench->add_option("--labels", bench_args.labels_path,
                      "labeled source labels CSV");
    bench->add_option("--methods", bench_args.methods, "comma-separated list");
    bench->add_option("--prior-p", bench_args.prior_p, "p(y=1) for X_p");
    bench->add_option("--prior-q", bench_args.prior_q, "p(y=1) for X_p'");
    bench->add_option("--n", bench_args.n, "size of X_p");
    bench->add_option("--nq", bench_args.nq, "size of X_p'");
    bench->add_option("--trials", bench_args.trials, "trial count");
    bench->add_option("--folds", bench_args.folds, "CV folds");
    bench->add_option("--seed", bench_args.seed, "random seed");

    BoundaryArgs boundary_args;
    auto* boundary = app.add_subcommand(
        "boundary", "Evaluate a fitted model over a 2-d grid");
    boundary->add_option("--model", boundary_args.model_path, "model JSON")
        ->required();
    boundary->add_option("--grid", boundary_args.grid,
                         "xmin,xmax,ymin,ymax,steps")
        ->required();
    boundary->add_option("--out", boundary_args.out, "output CSV");

    std::string manifest_path;
    auto* replay = app.add_subcommand("replay", "Re-run a saved manifest");
    replay->add_option("--manifest", manifest_path, "manifest JSON")->required();

    try {
        app.parse(std::vector<std::string>(argv.rbegin(), argv.rend()));
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    label_args.sigma_set = sig->count() > 0;
    label_args.lambda_set = lam->count() > 0;
    if (toy->parsed() &&
        (toy_args.prior_p <= 0.0 || toy_args.prior_p >= 1.0 ||
         toy_args.prior_q <= 0.0 || toy_args.prior_q >= 1.0)) {
        std::cerr << "error: priors must be in (0, 1)\n";
        return kExitUsage;
    }

    if (label->parsed()) return cmd_label(label_args, argv);
    if (toy->parsed()) return cmd_toy(toy_args, argv);
    if (bench->parsed()) return cmd_bench(bench_args, argv);
    if (boundary->parsed()) return cmd_boundary(boundary_args, argv);
    if (replay->parsed()) return cmd_replay(manifest_path);
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args);
}
