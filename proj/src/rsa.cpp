#include "numsense/rsa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include "numsense/errors.hpp"
#include "numsense/stats.hpp"

namespace numsense::rsa {

void Rdm::validate() const {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (values.rows() != n || values.cols() != n) throw ShapeMismatch("RDM size does not match its labels");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (values(i, i) != 0.0) throw DomainError("RDM diagonal must be zero");
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::abs(values(i, j) - values(j, i)) > 1e-12) throw DomainError("RDM is not symmetric");
        }
    }
}

std::vector<double> lower_triangle(const Rdm& rdm) {
    std::vector<double> out;
    const Eigen::Index n = rdm.values.rows();
    out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 1; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) out.push_back(rdm.values(i, j));
    }
    return out;
}

Rdm rdm_from_patterns(std::vector<std::string> labels, const Matrix& patterns) {
    const Eigen::Index n = patterns.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n) throw ShapeMismatch("one label per pattern column required");
    Matrix centred = patterns.rowwise() - patterns.colwise().mean();
    for (Eigen::Index j = 0; j < n; ++j) {
        const double norm = centred.col(j).norm();
        if (!(norm > 0.0)) throw NumericalError("pattern '" + labels[static_cast<std::size_t>(j)] +
                                                "' has zero variance; Pearson correlation undefined");
        centred.col(j) /= norm;
    }
    Rdm rdm{std::move(labels), Matrix::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            const double r = std::clamp(centred.col(i).dot(centred.col(j)), -1.0, 1.0);
            rdm.values(i, j) = rdm.values(j, i) = 1.0 - r;
        }
    }
    return rdm;
}

ConditionMeans condition_means(const Matrix& reps, const render::DatasetManifest& manifest,
                               std::size_t expected_conditions) {
    if (static_cast<std::size_t>(reps.cols()) != manifest.images.size()) {
        throw ShapeMismatch("representation count does not match the manifest");
    }
    ConditionMeans cm;
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::size_t> counts;
    for (const auto& e : manifest.images) {
        if (slot.emplace(e.condition, cm.labels.size()).second) {
            cm.labels.push_back(e.condition);
            cm.params.push_back(e.params);
            counts.push_back(0);
        }
    }
    if (expected_conditions != 0 && cm.labels.size() != expected_conditions) {
        throw InsufficientData("RSA set has " + std::to_string(cm.labels.size()) + " conditions, expected " +
                               std::to_string(expected_conditions) + " (missing conditions)");
    }
    cm.means = Matrix::Zero(reps.rows(), static_cast<Eigen::Index>(cm.labels.size()));
    for (std::size_t k = 0; k < manifest.images.size(); ++k) {
        const std::size_t c = slot[manifest.images[k].condition];
        cm.means.col(static_cast<Eigen::Index>(c)) += reps.col(static_cast<Eigen::Index>(k));
        ++counts[c];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) cm.means.col(static_cast<Eigen::Index>(c)) /= counts[c];
    return cm;
}

Rdm compute_model_rdm(const dbn::Dbn& net, const render::DatasetManifest& manifest, const Matrix& images,
                      std::size_t expected_conditions) {
    const Matrix reps = dbn::represent(net, images);
    ConditionMeans cm = condition_means(reps, manifest, expected_conditions);
    return rdm_from_patterns(std::move(cm.labels), cm.means);
}

Rdm compute_categorical_rdm(stimspace::Feature f, const std::vector<std::string>& labels,
                            std::span<const stimspace::StimulusParams> params) {
    if (labels.size() != params.size()) throw ShapeMismatch("one label per condition required");
    std::vector<double> logs;
    for (const auto& p : params) {
        const double v = stimspace::feature_value(p, f);
        if (!(v > 0.0)) throw DomainError("feature values must be positive for a log RDM");
        logs.push_back(std::log2(v));
    }
    const auto n = static_cast<Eigen::Index>(labels.size());
    Rdm rdm{labels, Matrix::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            rdm.values(i, j) = rdm.values(j, i) =
                std::abs(logs[static_cast<std::size_t>(i)] - logs[static_cast<std::size_t>(j)]);
        }
    }
    return rdm;
}

double compare_rdms(const Rdm& a, const Rdm& b) {
    if (a.labels != b.labels) throw ShapeMismatch("RDMs have different condition labels");
    const auto x = lower_triangle(a);
    const auto y = lower_triangle(b);
    return stats::kendall_tau_a(x, y);
}

Rdm rank_transform(const Rdm& rdm) {
    const auto tri = lower_triangle(rdm);
    Rdm out{rdm.labels, Matrix::Zero(rdm.values.rows(), rdm.values.cols())};
    if (tri.empty()) return out;
    const auto ranks = stats::midranks(tri);
    const auto [lo, hi] = std::minmax_element(ranks.begin(), ranks.end());
    const double span = *hi - *lo;
    std::size_t k = 0;
    for (Eigen::Index i = 1; i < out.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < i; ++j, ++k) {
            const double v = span > 0.0 ? (ranks[k] - *lo) / span : 0.0;
            out.values(i, j) = out.values(j, i) = v;
        }
    }
    return out;
}

Rdm mean_rdm(std::span<const Rdm> rdms) {
    if (rdms.empty()) throw InsufficientData("mean of zero RDMs");
    Rdm out = rdms.front();
    for (std::size_t k = 1; k < rdms.size(); ++k) {
        if (rdms[k].labels != out.labels) throw ShapeMismatch("RDMs have different condition labels");
        out.values += rdms[k].values;
    }
    out.values /= static_cast<double>(rdms.size());
    return out;
}

std::vector<Candidate> default_candidates(const std::vector<std::string>& labels,
                                          std::span<const stimspace::StimulusParams> params) {
    using stimspace::Feature;
    const std::vector<std::pair<std::string, Feature>> list = {
        {"Num", Feature::Num}, {"FA", Feature::FA},     {"ConvexHull", Feature::FA}, {"TSA", Feature::TSA},
        {"ISA", Feature::ISA}, {"Spar", Feature::Spar}, {"TP", Feature::TP},         {"IP", Feature::IP},
    };
    std::vector<Candidate> out;
    for (const auto& [name, f] : list) out.push_back({name, compute_categorical_rdm(f, labels, params)});
    return out;
}

namespace {

double signed_rank_p(std::span<const double> diffs, stats::Alternative alt) {
    if (std::all_of(diffs.begin(), diffs.end(), [](double d) { return d == 0.0; })) return 1.0;
    return stats::wilcoxon_signed_rank(diffs, alt).p_value;
}

}  // namespace

RelatednessReport relatedness_and_ceiling(std::span<const Rdm> instances, std::span<const Candidate> candidates,
                                          double fdr_q) {
    if (instances.size() < 6) {
        throw InsufficientData("relatedness testing needs at least 6 instance RDMs, got " +
                               std::to_string(instances.size()));
    }
    if (candidates.empty()) throw InsufficientData("no candidate RDMs");
    RelatednessReport report;
    report.fdr_q = fdr_q;

    std::vector<double> p_values;
    for (const Candidate& c : candidates) {
        CandidateResult r;
        r.name = c.name;
        for (const Rdm& inst : instances) r.taus.push_back(compare_rdms(inst, c.rdm));
        r.mean_tau = stats::mean(r.taus);
        r.median_tau = stats::median(r.taus);
        r.p_value = signed_rank_p(r.taus, stats::Alternative::Greater);
        p_values.push_back(r.p_value);
        report.candidates.push_back(std::move(r));
    }
    const auto flags = stats::bh_fdr(p_values, fdr_q);
    for (std::size_t k = 0; k < report.candidates.size(); ++k) report.candidates[k].significant = flags.rejected[k];

    std::vector<double> pair_p;
    for (std::size_t a = 0; a < report.candidates.size(); ++a) {
        for (std::size_t b = a + 1; b < report.candidates.size(); ++b) {
            std::vector<double> diffs;
            const auto& ta = report.candidates[a].taus;
            const auto& tb = report.candidates[b].taus;
            for (std::size_t i = 0; i < ta.size(); ++i) diffs.push_back(ta[i] - tb[i]);
            PairwiseResult pr{report.candidates[a].name, report.candidates[b].name, stats::mean(diffs),
                              signed_rank_p(diffs, stats::Alternative::TwoSided), false};
            pair_p.push_back(pr.p_value);
            report.pairwise.push_back(std::move(pr));
        }
    }
    if (!pair_p.empty()) {
        const auto pflags = stats::bh_fdr(pair_p, fdr_q);
        for (std::size_t k = 0; k < report.pairwise.size(); ++k) report.pairwise[k].significant = pflags.rejected[k];
    }

    const Rdm all = mean_rdm(instances);
    double upper = 0.0, lower = 0.0;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        upper += compare_rdms(instances[k], all);
        Rdm rest = all;
        rest.values = (all.values * static_cast<double>(instances.size()) - instances[k].values) /
                      static_cast<double>(instances.size() - 1);
        lower += compare_rdms(instances[k], rest);
    }
    report.ceiling_upper = upper / static_cast<double>(instances.size());
    report.ceiling_lower = lower / static_cast<double>(instances.size());
    return report;
}

int candidate_rank(const RelatednessReport& report, const std::string& name) {
    const auto it = std::find_if(report.candidates.begin(), report.candidates.end(),
                                 [&](const CandidateResult& c) { return c.name == name; });
    if (it == report.candidates.end()) throw DomainError("unknown candidate '" + name + "'");
    std::set<double> above;
    for (const CandidateResult& c : report.candidates) {
        if (c.median_tau > it->median_tau) above.insert(c.median_tau);
    }
    return 1 + static_cast<int>(above.size());
}

void write_rdm_csv(const std::filesystem::path& path, const Rdm& rdm) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17);
    for (const auto& l : rdm.labels) out << ',' << l;
    out << '\n';
    for (Eigen::Index i = 0; i < rdm.values.rows(); ++i) {
        out << rdm.labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < rdm.values.cols(); ++j) out << ',' << rdm.values(i, j);
        out << '\n';
    }
}

Rdm read_rdm_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty RDM file");
    auto header = split(line);
    if (header.empty() || !header.front().empty()) throw SchemaError(path.string() + " row 1: bad RDM header");
    Rdm rdm;
    rdm.labels.assign(header.begin() + 1, header.end());
    const auto n = static_cast<Eigen::Index>(rdm.labels.size());
    rdm.values = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing RDM rows");
        const auto cells = split(line);
        if (static_cast<Eigen::Index>(cells.size()) != n + 1 || cells[0] != rdm.labels[static_cast<std::size_t>(i)]) {
            throw SchemaError(path.string() + " row " + std::to_string(i + 2) + ": malformed RDM row");
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            try {
                rdm.values(i, j) = std::stod(cells[static_cast<std::size_t>(j + 1)]);
            } catch (const std::exception&) {
                throw SchemaError(path.string() + " row " + std::to_string(i + 2) + ": non-numeric entry");
            }
        }
    }
    rdm.validate();
    return rdm;
}

nlohmann::json report_to_json(const RelatednessReport& report) {
    nlohmann::json j;
    j["fdr_q"] = report.fdr_q;
    j["noise_ceiling"] = {{"lower", report.ceiling_lower}, {"upper", report.ceiling_upper}};
    j["candidates"] = nlohmann::json::array();
    for (const auto& c : report.candidates) {
        j["candidates"].push_back({{"name", c.name},
                                   {"taus", c.taus},
                                   {"mean_tau", c.mean_tau},
                                   {"median_tau", c.median_tau},
                                   {"p", c.p_value},
                                   {"significant", c.significant},
                                   {"rank", candidate_rank(report, c.name)}});
    }
    j["pairwise"] = nlohmann::json::array();
    for (const auto& p : report.pairwise) {
        j["pairwise"].push_back({{"a", p.a},
                                 {"b", p.b},
                                 {"mean_difference", p.mean_difference},
                                 {"p", p.p_value},
                                 {"significant", p.significant}});
    }
    return j;
}

}  // namespace numsense::rsa
