#include "numsense/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "numsense/errors.hpp"
#include "numsense/geometry.hpp"
#include "numsense/rsa.hpp"
#include "numsense/stats.hpp"

namespace numsense::report {

namespace fs = std::filesystem;
using nlohmann::json;

const RsaCandidate& RsaSummary::at(const std::string& name) const {
    for (const auto& c : candidates) {
        if (c.name == name) return c;
    }
    throw MissingInput("RSA report for '" + tag + "' has no candidate '" + name + "'");
}

const Check& ReportData::check(const std::string& claim_prefix) const {
    for (const auto& c : checks) {
        if (c.claim.rfind(claim_prefix, 0) == 0) return c;
    }
    throw std::out_of_range("no check starting with '" + claim_prefix + "'");
}

const std::vector<std::string>& report_tables() {
    static const std::vector<std::string> names{"coefficients.csv", "angles.csv",   "development.csv",
                                                "congruency.csv",   "accuracy.csv", "rsa.csv"};
    return names;
}

namespace {

std::string fmt(double v, int digits = 6) {
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

fs::path need(const fs::path& p) {
    if (!fs::exists(p)) throw MissingInput("missing input: " + p.string());
    return p;
}

json read_json(const fs::path& p) {
    std::ifstream in(need(p));
    try {
        return json::parse(in);
    } catch (const json::exception& ex) {
        throw SchemaError(p.string() + ": " + ex.what());
    }
}

RsaSummary read_rsa(const fs::path& p, const std::string& tag) {
    const json j = read_json(p);
    RsaSummary s;
    s.tag = tag;
    s.ceiling_lower = j.at("noise_ceiling").at("lower").get<double>();
    s.ceiling_upper = j.at("noise_ceiling").at("upper").get<double>();
    for (const auto& c : j.at("candidates")) {
        s.candidates.push_back({c.at("name").get<std::string>(), c.at("mean_tau").get<double>(),
                                c.at("median_tau").get<double>(), c.at("p").get<double>(),
                                c.at("significant").get<bool>(), c.at("rank").get<int>()});
    }
    return s;
}

DevelopmentRow compare(const std::string& measure, bool expect_increase, const std::vector<NetworkResult>& young,
                       const std::vector<NetworkResult>& mature, double (*get)(const NetworkResult&)) {
    DevelopmentRow row;
    row.measure = measure;
    row.expect_increase = expect_increase;
    row.n = young.size();
    std::vector<double> y, m, diffs;
    for (std::size_t k = 0; k < young.size(); ++k) {
        y.push_back(get(young[k]));
        m.push_back(get(mature[k]));
        diffs.push_back(m.back() - y.back());
        if (expect_increase ? diffs.back() > 0.0 : diffs.back() < 0.0) ++row.improved;
    }
    row.median_young = stats::median(y);
    row.median_mature = stats::median(m);
    row.median_moves = expect_increase ? row.median_mature > row.median_young : row.median_mature < row.median_young;
    const auto alt = expect_increase ? stats::Alternative::Greater : stats::Alternative::Less;
    const auto u = stats::mann_whitney_u(m, y, alt);
    row.u = u.statistic;
    row.p_u = u.p_value;
    if (std::any_of(diffs.begin(), diffs.end(), [](double d) { return d != 0.0; })) {
        row.p_sign = stats::sign_test(diffs, alt).p_value;
    }
    return row;
}

}  // namespace

ReportData collect(const pipeline::Layout& layout, const ExperimentConfig& cfg) {
    ReportData data;
    const int nets = cfg.dbn.networks;

    const auto fits = psychofit::read_fits_csv(need(layout.fits()));
    std::map<std::string, psychofit::GlmFit> fit_by_id;
    for (const auto& f : fits) fit_by_id[f.id] = f.fit;

    std::map<std::string, double> angle_num;
    {
        std::ifstream in(need(layout.geometry()));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string id, feature, proj, angle;
            std::getline(ss, id, ',');
            std::getline(ss, feature, ',');
            std::getline(ss, proj, ',');
            std::getline(ss, angle, ',');
            if (feature == "Num") angle_num[id] = std::stod(angle);
        }
    }
    const json task = read_json(layout.task_summary());

    for (int net = 1; net <= nets; ++net) {
        for (const auto& tag : pipeline::checkpoint_tags()) {
            const std::string id = pipeline::run_id(net, tag);
            const auto fit = fit_by_id.find(id);
            if (fit == fit_by_id.end()) throw MissingInput("no GLM fit for " + id);
            if (!task.contains(id)) throw MissingInput("no task summary for " + id);
            const json& t = task.at(id);
            NetworkResult r;
            r.net = net;
            r.tag = tag;
            r.beta = fit->second.coefficients;
            r.weber = r.beta.beta_num > 0.0 ? psychofit::weber_fraction(r.beta.beta_num) : std::nan("");
            r.pseudo_r2_adjusted = fit->second.pseudo_r2_adjusted;
            if (!angle_num.count(id)) throw MissingInput("no Numerosity angle for " + id);
            r.angle_num = angle_num.at(id);
            r.accuracy = t.at("accuracy").get<double>();
            r.congruent_n = t.at("congruent_n").get<std::size_t>();
            r.congruent_accuracy = t.at("congruent_accuracy").get<double>();
            r.incongruent_n = t.at("incongruent_n").get<std::size_t>();
            r.incongruent_accuracy = t.at("incongruent_accuracy").get<double>();
            (tag == "young" ? data.young : data.mature).push_back(r);
        }
    }

    data.development = {
        compare("beta_num", true, data.young, data.mature, [](const NetworkResult& r) { return r.beta.beta_num; }),
        compare("angle_num", false, data.young, data.mature, [](const NetworkResult& r) { return r.angle_num; }),
        compare("beta_size", false, data.young, data.mature, [](const NetworkResult& r) { return r.beta.beta_size; }),
        compare("beta_spacing", false, data.young, data.mature,
                [](const NetworkResult& r) { return r.beta.beta_spacing; }),
        compare("accuracy", true, data.young, data.mature, [](const NetworkResult& r) { return r.accuracy; }),
    };

    data.rsa_young = read_rsa(layout.rsa_report("young"), "young");
    data.rsa_mature = read_rsa(layout.rsa_report("mature"), "mature");

    // Self-correlation of every categorical model on the stored condition set.
    {
        const auto rdm = rsa::read_rdm_csv(need(layout.rdm(1, "young")));
        const auto manifest = render::read_manifest(need(layout.rsa_set() / "manifest.json"));
        std::map<std::string, stimspace::StimulusParams> by_label;
        for (const auto& e : manifest.images) by_label.emplace(e.condition, e.params);
        std::vector<stimspace::StimulusParams> params;
        for (const auto& l : rdm.labels) params.push_back(by_label.at(l));
        data.categorical_self_tau_one = true;
        for (const auto& c : rsa::default_candidates(rdm.labels, params)) {
            if (rsa::compare_rdms(c.rdm, c.rdm) != 1.0) data.categorical_self_tau_one = false;
        }
    }

    auto dev_check = [&](const DevelopmentRow& row, const std::string& claim) {
        const bool pass = row.median_moves && row.p_sign <= kSignTestAlpha;
        data.checks.push_back({claim, pass,
                               "median " + fmt(row.median_young, 4) + " -> " + fmt(row.median_mature, 4) + ", " +
                                   std::to_string(row.improved) + "/" + std::to_string(row.n) +
                                   " networks, sign test p=" + fmt(row.p_sign, 4)});
    };
    dev_check(data.development[0], "βNum(Mature) > βNum(Young)");
    dev_check(data.development[1], "angle to Num(Mature) < angle to Num(Young)");
    dev_check(data.development[2], "βSize(Mature) < βSize(Young)");
    dev_check(data.development[3], "βSpacing(Mature) < βSpacing(Young)");

    {
        std::size_t ok = 0;
        for (const auto& r : data.young) {
            if (r.congruent_n > 0 && r.incongruent_n > 0 &&
                100.0 * (r.congruent_accuracy - r.incongruent_accuracy) >= kCongruencyMarginPp) {
                ++ok;
            }
        }
        const std::size_t need_ok = data.young.size() >= 1 ? data.young.size() - 1 : 0;
        data.checks.push_back({"congruent - incongruent accuracy (Young) >= 5 pp", ok >= need_ok && ok > 0,
                               std::to_string(ok) + "/" + std::to_string(data.young.size()) + " networks"});
    }
    {
        std::vector<double> acc;
        for (const auto& r : data.mature) acc.push_back(r.accuracy);
        const double med = stats::median(acc);
        data.checks.push_back({"accuracy(Mature) > 60%", med > 0.6, "median " + fmt(100.0 * med, 2) + "%"});
    }
    {
        const auto& fa = data.rsa_young.at("FA");
        const auto& num = data.rsa_young.at("Num");
        data.checks.push_back({"RSA Young: tau(FA/ConvexHull) >= tau(Num)", fa.median_tau >= num.median_tau,
                               "median tau FA " + fmt(fa.median_tau, 4) + ", Num " + fmt(num.median_tau, 4)});
        const int ry = num.rank;
        const int rm = data.rsa_mature.at("Num").rank;
        data.checks.push_back({"RSA Mature: Num rank improves over Young", rm < ry,
                               "rank " + std::to_string(ry) + " -> " + std::to_string(rm)});
    }
    data.checks.push_back({"categorical RDM self-correlation = 1", data.categorical_self_tau_one, ""});
    {
        const bool ok = data.rsa_young.ceiling_lower <= data.rsa_young.ceiling_upper &&
                        data.rsa_mature.ceiling_lower <= data.rsa_mature.ceiling_upper;
        data.checks.push_back({"noise ceiling lower <= upper", ok,
                               "young [" + fmt(data.rsa_young.ceiling_lower, 4) + ", " +
                                   fmt(data.rsa_young.ceiling_upper, 4) + "], mature [" +
                                   fmt(data.rsa_mature.ceiling_lower, 4) + ", " +
                                   fmt(data.rsa_mature.ceiling_upper, 4) + "]"});
    }
    return data;
}

namespace {

std::ofstream open_table(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

}  // namespace

ReportData emit_report(const pipeline::Layout& layout, const ExperimentConfig& cfg) {
    ReportData data = collect(layout, cfg);
    const fs::path dir = layout.report();
    fs::create_directories(dir);

    std::vector<const NetworkResult*> all;
    for (std::size_t k = 0; k < data.young.size(); ++k) {
        all.push_back(&data.young[k]);
        all.push_back(&data.mature[k]);
    }

    {
        auto out = open_table(dir / "coefficients.csv");
        out << "network,tag,beta_side,beta_num,beta_size,beta_spacing,weber,pseudo_r2_adjusted,accuracy\n";
        for (const auto* r : all) {
            out << pipeline::network_id(r->net) << ',' << r->tag << ',' << fmt(r->beta.beta_side) << ','
                << fmt(r->beta.beta_num) << ',' << fmt(r->beta.beta_size) << ',' << fmt(r->beta.beta_spacing) << ','
                << fmt(r->weber) << ',' << fmt(r->pseudo_r2_adjusted) << ',' << fmt(r->accuracy) << '\n';
        }
    }
    {
        auto out = open_table(dir / "angles.csv");
        out << "network,tag,feature,projection,angle_deg\n";
        for (const auto* r : all) {
            const geometry::DiscriminationVector v{{r->beta.beta_num, r->beta.beta_size, r->beta.beta_spacing}};
            for (auto f : cfg.analysis.features) {
                out << pipeline::network_id(r->net) << ',' << r->tag << ',' << stimspace::feature_name(f) << ','
                    << fmt(geometry::project_onto_feature(v, f)) << ',' << fmt(geometry::angle_to_feature(v, f))
                    << '\n';
            }
        }
    }
    {
        auto out = open_table(dir / "development.csv");
        out << "measure,expected,median_young,median_mature,U,p_mannwhitney,improved,n,p_sign\n";
        for (const auto& d : data.development) {
            out << d.measure << ',' << (d.expect_increase ? "increase" : "decrease") << ',' << fmt(d.median_young)
                << ',' << fmt(d.median_mature) << ',' << fmt(d.u, 1) << ',' << fmt(d.p_u) << ',' << d.improved << ','
                << d.n << ',' << fmt(d.p_sign) << '\n';
        }
    }
    {
        auto out = open_table(dir / "congruency.csv");
        out << "network,tag,congruent_n,congruent_accuracy,incongruent_n,incongruent_accuracy,difference_pp\n";
        for (const auto* r : all) {
            out << pipeline::network_id(r->net) << ',' << r->tag << ',' << r->congruent_n << ','
                << fmt(r->congruent_accuracy) << ',' << r->incongruent_n << ',' << fmt(r->incongruent_accuracy)
                << ',' << fmt(100.0 * (r->congruent_accuracy - r->incongruent_accuracy), 3) << '\n';
        }
    }
    {
        const json task = read_json(layout.task_summary());
        auto out = open_table(dir / "accuracy.csv");
        out << "network,tag,ratio_lo,ratio_hi,n,accuracy\n";
        for (const auto* r : all) {
            for (const auto& b : task.at(pipeline::run_id(r->net, r->tag)).at("by_ratio")) {
                out << pipeline::network_id(r->net) << ',' << r->tag << ',' << fmt(b.at("lo").get<double>(), 1)
                    << ',' << fmt(b.at("hi").get<double>(), 1) << ',' << b.at("n").get<std::size_t>() << ','
                    << fmt(b.at("accuracy").get<double>()) << '\n';
            }
        }
    }
    {
        auto out = open_table(dir / "rsa.csv");
        out << "tag,candidate,mean_tau,median_tau,p,significant,rank,ceiling_lower,ceiling_upper\n";
        for (const RsaSummary* s : {&data.rsa_young, &data.rsa_mature}) {
            for (const auto& c : s->candidates) {
                out << s->tag << ',' << c.name << ',' << fmt(c.mean_tau) << ',' << fmt(c.median_tau) << ','
                    << fmt(c.p, 8) << ',' << (c.significant ? 1 : 0) << ',' << c.rank << ','
                    << fmt(s->ceiling_lower) << ',' << fmt(s->ceiling_upper) << '\n';
            }
        }
    }
    {
        auto out = open_table(dir / "summary.txt");
        out << "experiment: " << cfg.name << "\nnetworks: " << cfg.dbn.networks << "\n\n";
        for (const auto& c : data.checks) {
            out << c.claim << ": " << (c.pass ? "PASS" : "FAIL");
            if (!c.detail.empty()) out << " (" << c.detail << ")";
            out << '\n';
        }
    }
    return data;
}

}  // namespace numsense::report
