#include "numsense/readout.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "numsense/checkpoint.hpp"
#include "numsense/errors.hpp"
#include "numsense/parallel.hpp"
#include "numsense/seeds.hpp"

namespace numsense::readout {

namespace {

int side_index(Side s) { return s == Side::Left ? 0 : 1; }

// Accumulates X'X and T'X row by row so the design matrix never exists.
struct NormalEquations {
    Matrix xtx;
    Matrix ttx;
    Eigen::Index rows = 0;

    explicit NormalEquations(Eigen::Index dim) : xtx(Matrix::Zero(dim, dim)), ttx(Matrix::Zero(2, dim)) {}

    void add(const Vector& left, const Vector& right, Side correct) {
        const Eigen::Index h = left.size();
        Vector x(2 * h + 1);
        x << left, right, 1.0;
        xtx.selfadjointView<Eigen::Lower>().rankUpdate(x);
        ttx.row(side_index(correct)) += x.transpose();
        ++rows;
    }

    Matrix solve(std::optional<double> ridge) const {
        Matrix a = xtx.selfadjointView<Eigen::Lower>();
        return solve_normal(a, ttx, ridge);
    }

    static Matrix solve_normal(Matrix a, const Matrix& ttx, std::optional<double> ridge) {
        const auto dim = a.rows();
        const double lambda = ridge ? *ridge : 1e-6 * a.trace() / static_cast<double>(dim);
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("ridge must be a finite value >= 0");
        if (lambda == 0.0) {
            Eigen::ColPivHouseholderQR<Matrix> qr(a);
            if (qr.rank() < dim) {
                throw SingularSystem("X'X is rank-deficient (rank " + std::to_string(qr.rank()) + " of " +
                                     std::to_string(dim) + "); use a positive ridge");
            }
            return qr.solve(ttx.transpose()).transpose();
        }
        a.diagonal().array() += lambda;
        Eigen::LLT<Matrix> llt(a);
        if (llt.info() != Eigen::Success) throw SingularSystem("ridge system is not positive definite");
        return llt.solve(ttx.transpose()).transpose();
    }
};

void check_finite(const Matrix& w) {
    if (!w.allFinite()) throw NumericalError("read-out weights are not finite");
}

}  // namespace

Vector ReadoutModel::outputs(const Vector& left, const Vector& right) const {
    const Eigen::Index h = representation_size();
    if (left.size() != h || right.size() != h) {
        throw ShapeMismatch("representation width " + std::to_string(left.size()) + "/" +
                            std::to_string(right.size()) + " does not match read-out width " + std::to_string(h));
    }
    return weights.middleCols(0, h) * left + weights.middleCols(h, h) * right + weights.col(2 * h);
}

Matrix solve_ridge(const Matrix& x, const Matrix& t, std::optional<double> ridge) {
    if (x.rows() == 0) throw InsufficientData("empty design matrix");
    if (t.rows() != x.rows()) throw ShapeMismatch("targets and inputs have different row counts");
    const Matrix w = NormalEquations::solve_normal(x.transpose() * x, t.transpose() * x, ridge);
    check_finite(w);
    return w;
}

ReadoutModel fit_readout(std::span<const LabeledPair> pairs, const ReadoutOptions& options) {
    if (pairs.empty()) throw InsufficientData("read-out needs at least one training pair");
    const Eigen::Index h = pairs.front().left.size();
    NormalEquations eq(2 * h + 1);
    for (const LabeledPair& p : pairs) {
        if (p.left.size() != h || p.right.size() != h) throw ShapeMismatch("inconsistent representation widths");
        eq.add(p.left, p.right, p.correct);
        if (options.swap_augmentation) eq.add(p.right, p.left, opposite(p.correct));
    }
    ReadoutModel model{eq.solve(options.ridge), {}};
    check_finite(model.weights);
    return model;
}

ReadoutModel fit_readout(const Matrix& reps, std::span<const render::ImagePair> pairs,
                         const ReadoutOptions& options) {
    if (pairs.empty()) throw InsufficientData("read-out needs at least one training pair");
    NormalEquations eq(2 * reps.rows() + 1);
    for (const render::ImagePair& p : pairs) {
        if (p.left >= static_cast<std::size_t>(reps.cols()) || p.right >= static_cast<std::size_t>(reps.cols())) {
            throw ShapeMismatch("pair " + std::to_string(p.pair_id) + " indexes past the representation matrix");
        }
        const Vector l = reps.col(static_cast<Eigen::Index>(p.left));
        const Vector r = reps.col(static_cast<Eigen::Index>(p.right));
        eq.add(l, r, p.correct_side);
        if (options.swap_augmentation) eq.add(r, l, opposite(p.correct_side));
    }
    ReadoutModel model{eq.solve(options.ridge), {}};
    check_finite(model.weights);
    return model;
}

Side decide(const ReadoutModel& model, const Vector& left, const Vector& right, std::mt19937_64& rng) {
    const Vector out = model.outputs(left, right);
    if (out(0) > out(1)) return Side::Left;
    if (out(1) > out(0)) return Side::Right;
    return (rng() >> 63) == 0 ? Side::Left : Side::Right;
}

bool is_congruent(double r_num, double r_size, double r_spacing) {
    if (r_num == 1.0) return false;
    const bool up = r_num > 1.0;
    return up ? (r_size > 1.0 && r_spacing > 1.0) : (r_size < 1.0 && r_spacing < 1.0);
}

bool is_incongruent(double r_num, double r_size, double r_spacing) {
    if (r_num == 1.0) return false;
    const bool up = r_num > 1.0;
    return up ? (r_size < 1.0 && r_spacing < 1.0) : (r_size > 1.0 && r_spacing > 1.0);
}

TaskSummary summarize(std::span<const ChoiceRecord> records) {
    TaskSummary s;
    s.n = records.size();
    s.empty = records.empty();
    if (s.empty) return s;
    std::vector<std::size_t> bin_n(10, 0), bin_ok(10, 0);
    std::size_t ok = 0, cong_ok = 0, incong_ok = 0;
    for (const ChoiceRecord& r : records) {
        ok += r.correct;
        const double ratio = std::min(r.r_num, 1.0 / r.r_num);
        const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(ratio * 10.0)));
        ++bin_n[bin];
        bin_ok[bin] += r.correct;
        if (is_congruent(r.r_num, r.r_size, r.r_spacing)) {
            ++s.congruent_n;
            cong_ok += r.correct;
        } else if (is_incongruent(r.r_num, r.r_size, r.r_spacing)) {
            ++s.incongruent_n;
            incong_ok += r.correct;
        }
    }
    s.accuracy = static_cast<double>(ok) / static_cast<double>(s.n);
    for (std::size_t b = 0; b < 10; ++b) {
        if (bin_n[b] == 0) continue;
        s.by_ratio.push_back({b / 10.0, (b + 1) / 10.0, bin_n[b], static_cast<double>(bin_ok[b]) / bin_n[b]});
    }
    if (s.congruent_n > 0) s.congruent_accuracy = static_cast<double>(cong_ok) / s.congruent_n;
    if (s.incongruent_n > 0) s.incongruent_accuracy = static_cast<double>(incong_ok) / s.incongruent_n;
    return s;
}

TaskResult run_comparison_task(const Matrix& reps, const ReadoutModel& model,
                               std::span<const render::ImagePair> pairs, std::uint64_t seed) {
    if (reps.rows() != model.representation_size() && !pairs.empty()) {
        throw ShapeMismatch("representations have width " + std::to_string(reps.rows()) + ", read-out expects " +
                            std::to_string(model.representation_size()));
    }
    TaskResult result;
    result.records.resize(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        const render::ImagePair& p = pairs[i];
        if (p.left >= static_cast<std::size_t>(reps.cols()) || p.right >= static_cast<std::size_t>(reps.cols())) {
            throw ShapeMismatch("pair " + std::to_string(p.pair_id) + " indexes past the representation matrix");
        }
        std::mt19937_64 rng(derive_seed(seed, "decide", static_cast<std::uint64_t>(p.pair_id)));
        const Side choice = decide(model, reps.col(static_cast<Eigen::Index>(p.left)),
                                   reps.col(static_cast<Eigen::Index>(p.right)), rng);
        result.records[i] = {p.pair_id, p.r_num, p.r_size, p.r_spacing, choice, choice == p.correct_side, {}};
    });
    result.summary = summarize(result.records);
    return result;
}

void write_choices_csv(const std::filesystem::path& path, std::span<const ChoiceRecord> records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "pair_id,r_num,r_size,r_spacing,choice,correct\n" << std::setprecision(17);
    for (const ChoiceRecord& r : records) {
        out << r.id << ',' << r.r_num << ',' << r.r_size << ',' << r.r_spacing << ',' << side_name(r.choice) << ','
            << (r.correct ? 1 : 0) << '\n';
    }
}

void save_readout(const std::filesystem::path& path, const ReadoutModel& model) {
    const Eigen::Index cols = model.weights.cols() - 1;
    dbn::Rbm layer(cols, model.weights.rows());
    layer.weights = model.weights.leftCols(cols);
    layer.hidden_bias = model.weights.col(cols);
    dbn::Dbn container;
    container.layers.push_back(std::move(layer));
    container.tag = "readout";
    dbn::save_dbn(path, container, {{"trained_on", model.trained_on}});
}

ReadoutModel load_readout(const std::filesystem::path& path) {
    const dbn::Dbn container = dbn::load_dbn(path);
    if (container.layers.size() != 1 || container.tag != "readout") {
        throw SchemaError(path.string() + ": not a read-out checkpoint");
    }
    const dbn::Rbm& layer = container.layers.front();
    ReadoutModel model;
    model.weights.resize(layer.weights.rows(), layer.weights.cols() + 1);
    model.weights << layer.weights, layer.hidden_bias;
    std::ifstream side(dbn::sidecar_path(path));
    const auto doc = nlohmann::json::parse(side, nullptr, false);
    if (!doc.is_discarded() && doc.contains("meta")) model.trained_on = doc["meta"].value("trained_on", "");
    return model;
}

}  // namespace numsense::readout
