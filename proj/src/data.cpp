#include "densdiff/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "densdiff/rng.hpp"

namespace densdiff {

void validate(const Dataset& data) {
    if (data.n() < 1 || data.dim() < 1)
        throw std::invalid_argument("dataset must have n >= 1 and d >= 1");
    if (!data.samples.allFinite())
        throw std::invalid_argument("dataset contains non-finite entries");
}

void validate(const MixtureSpec& spec) {
    if (spec.components.empty())
        throw std::invalid_argument("mixture spec has no components");
    const Eigen::Index d = spec.dim();
    double wpos = 0.0, wneg = 0.0;
    bool has_pos = false, has_neg = false;
    for (const auto& c : spec.components) {
        if (c.label != 1 && c.label != -1)
            throw std::invalid_argument("component class must be -1 or +1");
        if (c.mean.size() != d || c.covariance.rows() != d ||
            c.covariance.cols() != d)
            throw std::invalid_argument("mixture component dimension mismatch");
        if (c.weight <= 0.0 || c.weight > 1.0)
            throw std::invalid_argument("component weight must be in (0, 1]");
        Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("component covariance is not SPD");
        (c.label == 1 ? wpos : wneg) += c.weight;
        (c.label == 1 ? has_pos : has_neg) = true;
    }
    if (has_pos && std::abs(wpos - 1.0) > 1e-12)
        throw std::invalid_argument("positive-class weights must sum to 1");
    if (has_neg && std::abs(wneg - 1.0) > 1e-12)
        throw std::invalid_argument("negative-class weights must sum to 1");
    if (!has_pos || !has_neg)
        throw std::invalid_argument("mixture spec needs both classes");
}

namespace {

double parse_cell(const std::string& cell, Eigen::Index row, Eigen::Index col) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    // allow trailing whitespace only
    for (std::size_t i = used; i < cell.size(); ++i) {
        if (!std::isspace(static_cast<unsigned char>(cell[i]))) used = 0;
    }
    if (used == 0 || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << "cannot parse cell at row " << (row + 1) << " col " << (col + 1)
            << ": '" << cell << "'";
        throw std::invalid_argument(msg.str());
    }
    return value;
}

std::vector<std::vector<double>> read_rows(const std::string& path,
                                           char delimiter, bool skip_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::vector<double>> table;
    std::string line;
    Eigen::Index row = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first && skip_header) {
            first = false;
            continue;
        }
        first = false;
        if (line.empty()) continue;
        std::vector<double> cells;
        std::string cell;
        std::istringstream ss(line);
        Eigen::Index col = 0;
        while (std::getline(ss, cell, delimiter)) {
            cells.push_back(parse_cell(cell, row, col));
            ++col;
        }
        if (!table.empty() && cells.size() != table.front().size()) {
            std::ostringstream msg;
            msg << "ragged row " << (row + 1) << ": expected "
                << table.front().size() << " columns, got " << cells.size();
            throw std::invalid_argument(msg.str());
        }
        table.push_back(std::move(cells));
        ++row;
    }
    if (table.empty()) throw std::invalid_argument("empty dataset: " + path);
    return table;
}

}  // namespace

Dataset load_csv(const std::string& path, char delimiter, bool skip_header) {
    const auto table = read_rows(path, delimiter, skip_header);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(table.size()),
                      static_cast<Eigen::Index>(table.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    Dataset data{std::move(m)};
    validate(data);
    return data;
}

Eigen::VectorXi load_labels_csv(const std::string& path, bool skip_header) {
    const auto table = read_rows(path, ',', skip_header);
    if (table.front().size() != 1)
        throw std::invalid_argument("label file must have exactly one column");
    Eigen::VectorXi labels(static_cast<Eigen::Index>(table.size()));
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        const double v = table[static_cast<std::size_t>(i)][0];
        if (v != 1.0 && v != -1.0)
            throw std::invalid_argument("labels must be -1 or +1, row " +
                                        std::to_string(i + 1));
        labels[i] = static_cast<int>(v);
    }
    return labels;
}

void save_csv(const std::string& path, const Eigen::MatrixXd& values,
              char delimiter) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.precision(17);
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j) out << delimiter;
            out << values(i, j);
        }
        out << '\n';
    }
}

void save_labels_csv(const std::string& path, const Eigen::VectorXi& labels) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (Eigen::Index i = 0; i < labels.size(); ++i) out << labels[i] << '\n';
}

LabeledDataset sample_mixture(const MixtureSpec& spec, Eigen::Index n,
                              double prior_pos, std::uint64_t seed) {
    validate(spec);
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (prior_pos <= 0.0 || prior_pos >= 1.0)
        throw std::invalid_argument("prior must be in (0, 1)");
    const Eigen::Index d = spec.dim();

    // Pre-factor the covariances once.
    std::vector<Eigen::MatrixXd> chol;
    chol.reserve(spec.components.size());
    for (const auto& c : spec.components)
        chol.push_back(Eigen::LLT<Eigen::MatrixXd>(c.covariance).matrixL());

    Rng rng(seed);
    LabeledDataset out;
    out.samples.resize(n, d);
    out.labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int label = rng.next_double() < prior_pos ? 1 : -1;
        // component within the class by weight
        double u = rng.next_double();
        std::size_t pick = spec.components.size();
        for (std::size_t k = 0; k < spec.components.size(); ++k) {
            if (spec.components[k].label != label) continue;
            if (u < spec.components[k].weight) {
                pick = k;
                break;
            }
            u -= spec.components[k].weight;
        }
        if (pick == spec.components.size()) {
            // numerical residue: take the last component of the class
            for (std::size_t k = spec.components.size(); k-- > 0;) {
                if (spec.components[k].label == label) {
                    pick = k;
                    break;
                }
            }
        }
        const auto& comp = spec.components[pick];
        out.samples.row(i) =
            (comp.mean + chol[pick] * rng.normal_vector(d)).transpose();
        out.labels[i] = label;
    }
    return out;
}

MixtureSpec toy1_spec() {
    MixtureSpec spec;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    spec.components.push_back({-Eigen::VectorXd::Ones(2), eye, 1.0, 1});
    spec.components.push_back({Eigen::VectorXd::Ones(2), eye, 1.0, -1});
    return spec;
}

MixtureSpec toy2_spec() {
    MixtureSpec spec;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    auto mean = [](double a, double b) {
        Eigen::VectorXd m(2);
        m << a, b;
        return m;
    };
    spec.components.push_back({mean(3, 0), eye, 0.5, 1});
    spec.components.push_back({mean(-3, 0), eye, 0.5, 1});
    spec.components.push_back({mean(0, 3), eye, 0.5, -1});
    spec.components.push_back({mean(0, -3), eye, 0.5, -1});
    return spec;
}

std::pair<Dataset, Dataset> hinge_example(Eigen::Index n, Eigen::Index nq,
                                          bool overlapping,
                                          std::uint64_t seed) {
    if (n < 1 || nq < 1) throw std::invalid_argument("n and nq must be >= 1");
    Rng rng(seed);
    Eigen::MatrixXd xp(n, 2), xq(nq, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        xp(i, 0) = 5.0 * rng.next_double();
        xp(i, 1) = rng.next_normal();
    }
    const double lo = overlapping ? 0.0 : 5.0;
    const double width = overlapping ? 10.0 : 5.0;
    for (Eigen::Index i = 0; i < nq; ++i) {
        xq(i, 0) = lo + width * rng.next_double();
        xq(i, 1) = rng.next_normal();
    }
    return {Dataset{std::move(xp)}, Dataset{std::move(xq)}};
}

std::vector<FoldSplit> kfold_indices(Eigen::Index n, int k,
                                     std::uint64_t seed) {
    if (k < 2 || static_cast<Eigen::Index>(k) > n)
        throw std::invalid_argument("fold count must satisfy 2 <= k <= n");
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng rng(seed);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.next_below(i)]);

    std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < perm.size(); ++i)
        folds[i % static_cast<std::size_t>(k)].second.push_back(perm[i]);
    for (auto& [train, val] : folds) {
        std::sort(val.begin(), val.end());
        std::vector<char> in_val(static_cast<std::size_t>(n), 0);
        for (auto i : val) in_val[static_cast<std::size_t>(i)] = 1;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!in_val[static_cast<std::size_t>(i)]) train.push_back(i);
    }
    return folds;
}

LabeledDataset resample_by_prior(const LabeledDataset& source, Eigen::Index n,
                                 double prior_pos, std::uint64_t seed) {
    if (prior_pos <= 0.0 || prior_pos >= 1.0)
        throw std::invalid_argument("prior must be in (0, 1)");
    Rng rng(seed);
    Eigen::Index n_pos = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (rng.next_double() < prior_pos) ++n_pos;

    std::vector<Eigen::Index> pos, neg;
    for (Eigen::Index i = 0; i < source.n(); ++i)
        (source.labels[i] == 1 ? pos : neg).push_back(i);
    if (n_pos > static_cast<Eigen::Index>(pos.size()) ||
        n - n_pos > static_cast<Eigen::Index>(neg.size()))
        throw std::runtime_error("insufficient class counts in labeled source");

    auto draw = [&](std::vector<Eigen::Index>& pool, Eigen::Index count,
                    std::vector<Eigen::Index>& out) {
        for (Eigen::Index i = 0; i < count; ++i) {
            const std::size_t j = rng.next_below(pool.size());
            out.push_back(pool[j]);
            pool[j] = pool.back();
            pool.pop_back();
        }
    };
    std::vector<Eigen::Index> picked;
    draw(pos, n_pos, picked);
    draw(neg, n - n_pos, picked);

    LabeledDataset out;
    out.samples.resize(n, source.dim());
    out.labels.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.samples.row(i) = source.samples.row(picked[static_cast<std::size_t>(i)]);
        out.labels[i] = source.labels[picked[static_cast<std::size_t>(i)]];
    }
    return out;
}

Dataset rows(const Dataset& data, const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(idx.size()), data.dim());
    for (std::size_t i = 0; i < idx.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = data.samples.row(idx[i]);
    return Dataset{std::move(m)};
}

std::pair<Dataset, Dataset> standardize_pair(const Dataset& xp,
                                             const Dataset& xq) {
    if (xp.dim() != xq.dim())
        throw std::invalid_argument("datasets must share dimension");
    const Eigen::Index m = xp.n() + xq.n();
    Eigen::MatrixXd pooled(m, xp.dim());
    pooled << xp.samples, xq.samples;
    const Eigen::RowVectorXd mean = pooled.colwise().mean();
    Eigen::RowVectorXd sd =
        ((pooled.rowwise() - mean).array().square().colwise().sum() /
         static_cast<double>(m))
            .sqrt();
    for (Eigen::Index j = 0; j < sd.size(); ++j)
        if (sd[j] < 1e-300) sd[j] = 1.0;
    Dataset a{(xp.samples.rowwise() - mean).array().rowwise() / sd.array()};
    Dataset b{(xq.samples.rowwise() - mean).array().rowwise() / sd.array()};
    return {std::move(a), std::move(b)};
}

}  // namespace densdiff
