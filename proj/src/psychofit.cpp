#include "numsense/psychofit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "numsense/datasets.hpp"
#include "numsense/errors.hpp"
#include "numsense/stats.hpp"

namespace numsense::psychofit {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kTiny = 1e-300;

Beta regressors(const ChoiceRecord& r) {
    return {1.0, std::log2(r.r_num), std::log2(r.r_size), std::log2(r.r_spacing)};
}

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in [0, 1)");
}

struct Evaluation {
    double ll = 0.0;
    Beta grad = Beta::Zero();
    Eigen::Matrix4d hess = Eigen::Matrix4d::Zero();
    Eigen::Matrix4d fisher = Eigen::Matrix4d::Zero();
};

Evaluation evaluate(const Beta& beta, double gamma, std::span<const ChoiceRecord> records, bool derivatives) {
    Evaluation e;
    const double a = 1.0 - gamma;
    for (const ChoiceRecord& r : records) {
        const Beta x = regressors(r);
        const double z = beta.dot(x);
        const double phi = kInvSqrt2Pi * std::exp(-0.5 * z * z);
        const double p = 0.5 * gamma + a * 0.5 * std::erfc(-z / std::sqrt(2.0));
        const double q = 0.5 * gamma + a * 0.5 * std::erfc(z / std::sqrt(2.0));
        const bool right = r.choice == Side::Right;
        const double prob = right ? p : q;
        e.ll += std::log(std::max(prob, kTiny));
        if (!derivatives) continue;
        // dll/dz and d2ll/dz2; the Mills-ratio limit covers underflow when gamma == 0.
        double ratio;
        if (prob > kTiny) {
            ratio = a * phi / prob;
        } else {
            ratio = right ? -z : z;
        }
        const double sign = right ? 1.0 : -1.0;
        const double d1 = sign * ratio;
        const double d2 = -z * d1 - ratio * ratio;
        e.grad += d1 * x;
        e.hess += d2 * (x * x.transpose());
        const double pq = std::max(p * q, kTiny);
        e.fisher += (a * a * phi * phi / pq) * (x * x.transpose());
    }
    return e;
}

struct Optimum {
    Beta beta = Beta::Zero();
    double ll = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Damped Newton over the active coordinates, with Fisher scoring whenever the
// Hessian is not negative definite.
Optimum maximize(std::span<const ChoiceRecord> records, double gamma, const std::array<bool, 4>& active,
                 const GlmOptions& opt) {
    std::vector<int> idx;
    for (int k = 0; k < 4; ++k) {
        if (active[static_cast<std::size_t>(k)]) idx.push_back(k);
    }
    const auto m = static_cast<Eigen::Index>(idx.size());
    Optimum o;
    Evaluation e = evaluate(o.beta, gamma, records, true);
    o.ll = e.ll;
    for (o.iterations = 0; o.iterations < opt.max_iterations; ++o.iterations) {
        Eigen::VectorXd g(m);
        Eigen::MatrixXd h(m, m), f(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            g(i) = e.grad(idx[static_cast<std::size_t>(i)]);
            for (Eigen::Index j = 0; j < m; ++j) {
                h(i, j) = e.hess(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
                f(i, j) = e.fisher(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
            }
        }
        if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
            o.converged = true;
            break;
        }
        Eigen::VectorXd step;
        Eigen::LLT<Eigen::MatrixXd> newton(-h);
        if (newton.info() == Eigen::Success) {
            step = newton.solve(g);
        } else {
            Eigen::LDLT<Eigen::MatrixXd> scoring(f);
            step = scoring.solve(g);
        }
        if (!step.allFinite()) break;
        bool accepted = false;
        for (double t = 1.0; t > 1e-12; t *= 0.5) {
            Beta trial = o.beta;
            for (Eigen::Index i = 0; i < m; ++i) trial(idx[static_cast<std::size_t>(i)]) += t * step(i);
            const double ll = evaluate(trial, gamma, records, false).ll;
            if (std::isfinite(ll) && ll >= o.ll - 1e-12 * (1.0 + std::abs(o.ll))) {
                o.beta = trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        e = evaluate(o.beta, gamma, records, true);
        o.ll = e.ll;
    }
    return o;
}

bool has_two_values(std::span<const ChoiceRecord> records, double ChoiceRecord::*field) {
    if (records.empty()) return false;
    const double first = records.front().*field;
    return std::any_of(records.begin(), records.end(), [&](const ChoiceRecord& r) { return r.*field != first; });
}

}  // namespace

double predict_choice_prob(const GlmCoefficients& c, double gamma, double r_num, double r_size, double r_spacing) {
    check_gamma(gamma);
    for (double r : {r_num, r_size, r_spacing}) {
        if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("ratios must be positive and finite");
    }
    const double z = c.beta_side + c.beta_num * std::log2(r_num) + c.beta_size * std::log2(r_size) +
                     c.beta_spacing * std::log2(r_spacing);
    return 0.5 * gamma + (1.0 - gamma) * stats::normal_cdf(z);
}

double log_likelihood(const Beta& beta, double gamma, std::span<const ChoiceRecord> records) {
    check_gamma(gamma);
    return evaluate(beta, gamma, records, false).ll;
}

Beta gradient(const Beta& beta, double gamma, std::span<const ChoiceRecord> records) {
    check_gamma(gamma);
    return evaluate(beta, gamma, records, true).grad;
}

Eigen::Matrix4d hessian(const Beta& beta, double gamma, std::span<const ChoiceRecord> records) {
    check_gamma(gamma);
    return evaluate(beta, gamma, records, true).hess;
}

GlmFit fit_glm(std::span<const ChoiceRecord> records, const GlmOptions& options) {
    check_gamma(options.gamma);
    if (records.size() < options.min_records) {
        throw InsufficientData("GLM fit needs at least " + std::to_string(options.min_records) + " records, got " +
                               std::to_string(records.size()));
    }
    for (const ChoiceRecord& r : records) {
        for (double v : {r.r_num, r.r_size, r.r_spacing}) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw DomainError("record " + std::to_string(r.id) + " has a non-positive ratio");
            }
        }
    }
    GlmFit fit;
    fit.gamma = options.gamma;
    fit.n_trials = records.size();
    fit.identifiable = {has_two_values(records, &ChoiceRecord::r_num), has_two_values(records, &ChoiceRecord::r_size),
                        has_two_values(records, &ChoiceRecord::r_spacing)};
    const std::array<bool, 4> active{true, fit.identifiable[0], fit.identifiable[1], fit.identifiable[2]};

    const Optimum full = maximize(records, options.gamma, active, options);
    const Optimum null = maximize(records, options.gamma, {true, false, false, false}, options);

    fit.coefficients = GlmCoefficients::from_vector(full.beta);
    fit.log_likelihood = full.ll;
    fit.null_log_likelihood = null.ll;
    fit.iterations = full.iterations;
    fit.converged = full.converged;
    fit.separation_warning = (full.beta.array().abs() > options.separation_bound).any();
    const int free = static_cast<int>(std::count(active.begin(), active.end(), true));
    fit.chi_square_dof = free - 1;
    fit.chi_square_lr = std::max(0.0, 2.0 * (full.ll - null.ll));
    if (fit.chi_square_dof > 0) {
        const boost::math::chi_squared dist(fit.chi_square_dof);
        fit.chi_square_p = boost::math::cdf(boost::math::complement(dist, fit.chi_square_lr));
    }
    if (null.ll < 0.0) {
        fit.pseudo_r2 = 1.0 - full.ll / null.ll;
        fit.pseudo_r2_adjusted = 1.0 - (full.ll - free) / null.ll;
    }
    return fit;
}

std::vector<double> default_gamma_grid() {
    std::vector<double> g;
    for (int k = 0; k <= 10; ++k) g.push_back(0.005 * k);
    return g;
}

GlmFit fit_glm_gamma_search(std::span<const ChoiceRecord> records, std::span<const double> grid, GlmOptions options) {
    if (grid.empty()) throw DomainError("gamma grid is empty");
    GlmFit best;
    bool have = false;
    for (double gamma : grid) {
        options.gamma = gamma;
        GlmFit fit = fit_glm(records, options);
        if (!have || fit.log_likelihood > best.log_likelihood) {
            best = fit;
            have = true;
        }
    }
    return best;
}

double weber_fraction(double beta_num) {
    if (!(beta_num > 0.0)) throw DomainError("Weber fraction needs beta_num > 0 (no numerosity sensitivity)");
    return 1.0 / (std::sqrt(2.0) * beta_num);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(const std::string& s, const std::filesystem::path& path, std::size_t row, const char* column) {
    // strtod rather than stod: tiny p-values underflow to subnormals, which
    // stod rejects as out of range.
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (!s.empty() && end == s.c_str() + s.size() && std::isfinite(v)) return v;
    throw SchemaError(path.string() + " row " + std::to_string(row) + ": column '" + column + "' is not a number: '" +
                      s + "'");
}

}  // namespace

IngestResult filter_human_trials(std::vector<ChoiceRecord> records, const IngestOptions& options) {
    IngestResult result;
    result.rows = records.size();
    std::vector<ChoiceRecord> kept;
    for (ChoiceRecord& r : records) {
        if (!r.rt_ms) throw DomainError("human trial " + std::to_string(r.id) + " has no response time");
        if (*r.rt_ms < options.presentation_ms) {
            ++result.dropped_presentation;
        } else {
            kept.push_back(std::move(r));
        }
    }
    std::map<int, std::vector<double>> bins;
    auto bin_of = [](const ChoiceRecord& r) { return render::ratio_bucket(std::min(r.r_num, 1.0 / r.r_num)); };
    for (const ChoiceRecord& r : kept) bins[bin_of(r)].push_back(*r.rt_ms);
    std::map<int, double> threshold;
    for (const auto& [bin, rts] : bins) {
        threshold[bin] = rts.size() < 2 ? std::numeric_limits<double>::infinity()
                                        : stats::mean(rts) + options.sd_multiplier * stats::sample_sd(rts);
    }
    for (ChoiceRecord& r : kept) {
        if (*r.rt_ms > threshold[bin_of(r)]) {
            ++result.dropped_slow;
        } else {
            result.records.push_back(std::move(r));
        }
    }
    return result;
}

IngestResult ingest_trials(const std::filesystem::path& path, Protocol protocol, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool trial_schema = line == "trial_id,r_num,r_size,r_spacing,choice,rt_ms";
    if (!trial_schema && line != "pair_id,r_num,r_size,r_spacing,choice,correct") {
        throw SchemaError(path.string() + " row 1: unrecognized header '" + line + "'");
    }
    std::vector<ChoiceRecord> records;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 6) {
            throw SchemaError(path.string() + " row " + std::to_string(row) + ": expected 6 columns, got " +
                              std::to_string(cells.size()));
        }
        ChoiceRecord r;
        r.id = static_cast<int>(parse_number(cells[0], path, row, trial_schema ? "trial_id" : "pair_id"));
        r.r_num = parse_number(cells[1], path, row, "r_num");
        r.r_size = parse_number(cells[2], path, row, "r_size");
        r.r_spacing = parse_number(cells[3], path, row, "r_spacing");
        for (double v : {r.r_num, r.r_size, r.r_spacing}) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw SchemaError(path.string() + " row " + std::to_string(row) + ": ratios must be positive");
            }
        }
        try {
            r.choice = parse_side(cells[4]);
        } catch (const SchemaError& ex) {
            throw SchemaError(path.string() + " row " + std::to_string(row) + ": " + ex.what());
        }
        if (trial_schema) {
            r.correct = larger_side(r.r_num) == r.choice;
            if (!cells[5].empty()) r.rt_ms = parse_number(cells[5], path, row, "rt_ms");
        } else {
            if (cells[5] != "0" && cells[5] != "1") {
                throw SchemaError(path.string() + " row " + std::to_string(row) + ": correct must be 0 or 1");
            }
            r.correct = cells[5] == "1";
        }
        if (protocol == Protocol::Human && !r.rt_ms) {
            throw SchemaError(path.string() + " row " + std::to_string(row) + ": human trials need rt_ms");
        }
        records.push_back(r);
    }
    if (protocol == Protocol::Model) {
        IngestResult result;
        result.rows = records.size();
        result.records = std::move(records);
        return result;
    }
    return filter_human_trials(std::move(records), options);
}

void write_fits_csv(const std::filesystem::path& path, std::span<const NamedFit> fits) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "id,beta_side,beta_num,beta_size,beta_spacing,gamma,weber,log_likelihood,null_log_likelihood,"
           "pseudo_r2,pseudo_r2_adjusted,chi_square_lr,chi_square_dof,chi_square_p,n_trials,iterations,converged,"
           "separation_warning,identifiable_num,identifiable_size,identifiable_spacing\n"
        << std::setprecision(17);
    for (const NamedFit& nf : fits) {
        const GlmFit& f = nf.fit;
        const GlmCoefficients& c = f.coefficients;
        out << nf.id << ',' << c.beta_side << ',' << c.beta_num << ',' << c.beta_size << ',' << c.beta_spacing << ','
            << f.gamma << ',';
        if (c.beta_num > 0.0) out << weber_fraction(c.beta_num);
        out << ',' << f.log_likelihood << ',' << f.null_log_likelihood << ',' << f.pseudo_r2 << ','
            << f.pseudo_r2_adjusted << ',' << f.chi_square_lr << ',' << f.chi_square_dof << ',' << f.chi_square_p
            << ',' << f.n_trials << ',' << f.iterations << ',' << f.converged << ',' << f.separation_warning << ','
            << f.identifiable[0] << ',' << f.identifiable[1] << ',' << f.identifiable[2] << '\n';
    }
}

std::vector<NamedFit> read_fits_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file");
    const auto header = split_csv(line);
    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError(path.string() + " row 1: missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_id = column("id"), c_side = column("beta_side"), c_num = column("beta_num"),
                      c_size = column("beta_size"), c_spacing = column("beta_spacing"), c_gamma = column("gamma"),
                      c_ll = column("log_likelihood"), c_null = column("null_log_likelihood"),
                      c_r2 = column("pseudo_r2"), c_r2a = column("pseudo_r2_adjusted"),
                      c_chi = column("chi_square_lr"), c_dof = column("chi_square_dof"), c_p = column("chi_square_p"),
                      c_n = column("n_trials"), c_it = column("iterations"), c_conv = column("converged"),
                      c_sep = column("separation_warning");
    std::vector<NamedFit> fits;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw SchemaError(path.string() + " row " + std::to_string(row) + ": wrong column count");
        }
        auto num = [&](std::size_t c) { return parse_number(cells[c], path, row, header[c].c_str()); };
        NamedFit nf;
        nf.id = cells[c_id];
        GlmFit& f = nf.fit;
        f.coefficients = {num(c_side), num(c_num), num(c_size), num(c_spacing)};
        f.gamma = num(c_gamma);
        f.log_likelihood = num(c_ll);
        f.null_log_likelihood = num(c_null);
        f.pseudo_r2 = num(c_r2);
        f.pseudo_r2_adjusted = num(c_r2a);
        f.chi_square_lr = num(c_chi);
        f.chi_square_dof = static_cast<int>(num(c_dof));
        f.chi_square_p = num(c_p);
        f.n_trials = static_cast<std::size_t>(num(c_n));
        f.iterations = static_cast<int>(num(c_it));
        f.converged = num(c_conv) != 0.0;
        f.separation_warning = num(c_sep) != 0.0;
        fits.push_back(std::move(nf));
    }
    return fits;
}

}  // namespace numsense::psychofit
