// Acceptance suite: one PASS/FAIL line per criterion. Criteria 7-10 run the
// shipped desk configuration end to end (twice, for the determinism check).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "numsense/config.hpp"
#include "numsense/geometry.hpp"
#include "numsense/pipeline.hpp"
#include "numsense/psychofit.hpp"
#include "numsense/render.hpp"
#include "numsense/report.hpp"
#include "numsense/stats.hpp"
#include "numsense/stimspace.hpp"
#include "synthetic.hpp"

using namespace numsense;
namespace fs = std::filesystem;
using stimspace::Feature;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); }

// Feature formulas evaluated through natural logs, independently of stimspace.
Outcome feature_algebra() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<int> n_dist(1, 200);
    std::uniform_real_distribution<double> log_u(std::log(1e2), std::log(1e9));
    std::size_t bad = 0;
    const double c_tp = std::log2(2.0 * std::sqrt(std::numbers::pi));
    for (int t = 0; t < 10000; ++t) {
        const int n = n_dist(rng);
        double a = log_u(rng), b = log_u(rng);
        if (b < a) std::swap(a, b);
        const stimspace::StimulusParams p(n, std::exp(a), std::exp(b));
        const double ln_n = std::log(static_cast<double>(n)), ln_sz = std::log(p.size()), ln_sp = std::log(p.spacing());
        const auto f = stimspace::derive_features(p);
        const double two_sqrt_pi = 2.0 * std::sqrt(std::numbers::pi);
        const double oracle[8] = {
            std::exp(0.5 * (ln_sz + ln_n)),   std::exp(0.5 * (ln_sz - ln_n)),
            std::exp(0.5 * (ln_sp + ln_n)),   std::exp(0.5 * (ln_sp - ln_n)),
            two_sqrt_pi * std::exp(0.25 * ln_sz + 0.75 * ln_n),
            two_sqrt_pi * std::exp(0.25 * ln_sz - 0.25 * ln_n),
            std::exp(0.5 * (ln_sz - ln_sp)),  std::exp(0.5 * (ln_sz + ln_sp)),
        };
        const double got[8] = {f.tsa, f.isa, f.fa, f.spar, f.tp, f.ip, f.cov, f.ac};
        for (int k = 0; k < 8; ++k) bad += !rel_close(got[k], oracle[k], 1e-9);

        // log2 f = const + coefficients . (log2 n, log2 Size, log2 Spacing)
        const auto lp = stimspace::to_log_point(p);
        for (Feature feat : stimspace::kAllFeatures) {
            const auto c = stimspace::log_coefficients(feat);
            const double konst = (feat == Feature::TP || feat == Feature::IP) ? c_tp : 0.0;
            const double predicted = std::exp2(konst + c[0] * lp.x + c[1] * lp.y + c[2] * lp.z);
            bad += !rel_close(predicted, stimspace::feature_value(p, feat), 1e-9);
        }
    }
    const auto isa = stimspace::feature_axis(Feature::ISA).direction;
    const auto ip = stimspace::feature_axis(Feature::IP).direction;
    const bool coincide = isa == ip;
    const auto num = stimspace::feature_axis(Feature::Num).direction;
    const auto size = stimspace::feature_axis(Feature::Size).direction;
    const auto spacing = stimspace::feature_axis(Feature::Spacing).direction;
    auto dot = [](const stimspace::Vec3& u, const stimspace::Vec3& v) { return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]; };
    const bool orthogonal = dot(num, size) == 0.0 && dot(num, spacing) == 0.0 && dot(size, spacing) == 0.0;
    const double secs = seconds_since(t0);
    return {bad == 0 && coincide && orthogonal && secs < 5.0,
            std::to_string(bad) + " violations in 10000 samples, ISA/IP coincide " + (coincide ? "yes" : "no") +
                ", axes orthogonal " + (orthogonal ? "yes" : "no") + ", " + fmt("%.2f s", secs)};
}

Outcome generator_fidelity() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2002);
    const stimspace::GridSpec g;
    std::uniform_int_distribution<int> n_dist(7, 28);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto log_draw = [&](stimspace::Range r) { return std::exp2(std::log2(r.lo) + u(rng) * std::log2(r.hi / r.lo)); };
    int count_ok = 0, tsa_ok = 0, failed = 0;
    for (int i = 0; i < 500; ++i) {
        const stimspace::StimulusParams p(n_dist(rng), log_draw(g.size_range), log_draw(g.spacing_range));
        try {
            const auto m = render::measure_image(render::render_image(p, {200, 200}, rng()));
            count_ok += m.count == p.n();
            const double tsa = std::sqrt(p.size() * p.n());
            tsa_ok += std::abs(m.features.tsa - tsa) / tsa <= 0.10;
        } catch (const std::exception&) {
            ++failed;
        }
    }
    const double secs = seconds_since(t0);
    return {count_ok == 500 && tsa_ok >= 475 && secs < 60.0,
            "count exact " + std::to_string(count_ok) + "/500, TSA within 10% " + std::to_string(tsa_ok) +
                "/500, render failures " + std::to_string(failed) + ", " + fmt("%.1f s", secs)};
}

Outcome glm_recovery() {
    const auto t0 = Clock::now();
    const psychofit::GlmCoefficients truth{0.0, 2.21, 0.3, 0.3};
    int recovered = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto pairs = testing::grid_pairs(15200, 300 + seed);
        const auto recs = testing::simulate_observer(pairs, truth, 0.01, 400 + seed);
        const auto fit = psychofit::fit_glm(recs);
        const psychofit::Beta err = (fit.coefficients.as_vector() - truth.as_vector()).cwiseAbs();
        worst = std::max(worst, err.maxCoeff());
        recovered += fit.converged && err.maxCoeff() <= 0.1;
    }
    const auto pairs = testing::grid_pairs(5000, 500);
    const auto recs = testing::simulate_observer(pairs, truth, 0.01, 501);
    const psychofit::Beta beta(0.05, 2.0, 0.25, 0.35);
    const psychofit::Beta g = psychofit::gradient(beta, 0.01, recs);
    double grad_err = 0.0;
    for (int k = 0; k < 4; ++k) {
        const double h = 1e-5;
        psychofit::Beta up = beta, dn = beta;
        up(k) += h;
        dn(k) -= h;
        const double fd = (psychofit::log_likelihood(up, 0.01, recs) - psychofit::log_likelihood(dn, 0.01, recs)) / (2 * h);
        grad_err = std::max(grad_err, std::abs(fd - g(k)) / std::max(1.0, std::abs(g(k))));
    }
    const double secs = seconds_since(t0);
    return {recovered == 5 && grad_err < 1e-5 && secs < 60.0,
            std::to_string(recovered) + "/5 seeds within 0.1 (worst error " + fmt("%.4f", worst) +
                "), gradient relative error " + fmt("%.2e", grad_err) + ", " + fmt("%.1f s", secs)};
}

Outcome weber_endpoints() {
    const double young = psychofit::weber_fraction(2.2097);
    const double mature = psychofit::weber_fraction(3.2141);
    const bool ok = std::round(young * 1000) == 320 && std::round(mature * 1000) == 220;
    return {ok, "w(2.2097) = " + fmt("%.4f", young) + ", w(3.2141) = " + fmt("%.4f", mature)};
}

Outcome geometry_oracles() {
    const geometry::DiscriminationVector x{{1, 0, 0}};
    const double tp = geometry::angle_to_feature(x, Feature::TP);
    const double tsa = geometry::angle_to_feature(x, Feature::TSA);
    std::mt19937_64 rng(5005);
    std::normal_distribution<double> gauss(0.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const geometry::DiscriminationVector v{{gauss(rng), gauss(rng), gauss(rng)}};
        for (Feature f : stimspace::kAllFeatures) {
            const double theta = geometry::angle_to_feature(v, f) * std::numbers::pi / 180.0;
            worst = std::max(worst, std::abs(v.norm() * std::cos(theta) - geometry::project_onto_feature(v, f)));
        }
    }
    const bool ok = std::abs(tp - 18.435) <= 0.001 && std::abs(tsa - 45.0) <= 1e-6 && worst <= 1e-9;
    return {ok, "TP " + fmt("%.6f", tp) + " deg, TSA " + fmt("%.9f", tsa) + " deg, projection mismatch " +
                    fmt("%.1e", worst)};
}

Outcome statistics_oracles() {
    using namespace stats;
    const std::vector<double> d{1, 2, 3};
    const double w = wilcoxon_signed_rank(d, Alternative::Greater).p_value;
    const std::vector<double> x{1, 2}, y{3, 4};
    const double u = mann_whitney_u(x, y, Alternative::Less).p_value;
    const std::vector<double> a{1, 2, 3}, b{1, 3, 2};
    const double tau = kendall_tau_a(a, b);
    const std::vector<double> p{0.001, 0.008, 0.039, 0.041};
    const auto bh = bh_fdr(p, 0.05);
    const bool ok = w == 0.125 && std::abs(u - 1.0 / 6.0) < 1e-15 && std::abs(tau - 1.0 / 3.0) < 1e-15 &&
                    bh.rejected_count == 4;
    return {ok, "signed-rank p " + fmt("%.6f", w) + ", U p " + fmt("%.6f", u) + ", tau-a " + fmt("%.6f", tau) +
                    ", BH rejects " + std::to_string(bh.rejected_count) + "/4"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct DeskRun {
    bool ok = false;
    std::string error;
    double seconds = 0.0;
    report::ReportData data;
};

DeskRun run_desk(const ExperimentConfig& base, const fs::path& root, bool fresh) {
    DeskRun run;
    ExperimentConfig cfg = base;
    cfg.artifacts = root;
    if (fresh) fs::remove_all(root);
    const auto t0 = Clock::now();
    try {
        pipeline::run_pipeline(cfg, pipeline::parse_stages("all"), {false, &std::cerr});
        run.data = report::collect(pipeline::Layout{root}, cfg);
        run.ok = true;
    } catch (const std::exception& ex) {
        run.error = ex.what();
    }
    run.seconds = seconds_since(t0);
    return run;
}

Outcome with_checks(const DeskRun& run, const std::vector<std::string>& prefixes, const std::string& extra = {}) {
    if (!run.ok) return {false, "desk run failed: " + run.error};
    Outcome o{true, {}};
    for (const auto& prefix : prefixes) {
        const auto& c = run.data.check(prefix);
        o.pass = o.pass && c.pass;
        if (!o.detail.empty()) o.detail += "; ";
        o.detail += c.claim + " " + (c.pass ? "PASS" : "FAIL") + " (" + c.detail + ")";
    }
    if (!extra.empty()) o.detail += "; " + extra;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    fs::path work = fs::temp_directory_path() / "numsense_acceptance";
    fs::path config_path = fs::path(NUMSENSE_SOURCE_DIR) / "configs" / "desk.json";
    bool reuse = false;
    bool skip_desk = false;
    app.add_option("--work", work, "Scratch directory for the desk runs");
    app.add_option("--config", config_path, "Desk configuration")->check(CLI::ExistingFile);
    app.add_flag("--reuse", reuse, "Keep existing desk artifacts instead of starting fresh");
    app.add_flag("--skip-desk", skip_desk, "Only run criteria 1-6");
    CLI11_PARSE(app, argc, argv);

    std::vector<std::pair<int, Outcome>> results;
    auto report_line = [&](int id, const Outcome& o) {
        results.emplace_back(id, o);
        std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << ")" << std::endl;
    };

    report_line(1, feature_algebra());
    report_line(2, generator_fidelity());
    report_line(3, glm_recovery());
    report_line(4, weber_endpoints());
    report_line(5, geometry_oracles());
    report_line(6, statistics_oracles());

    if (!skip_desk) {
        const ExperimentConfig cfg = load_config(config_path);
        const DeskRun a = run_desk(cfg, work / "desk_a", !reuse);
        const std::string timing = fmt("desk run %.0f s", a.seconds);
        Outcome c7 = with_checks(a,
                                 {"βNum(Mature) > βNum(Young)", "angle to Num(Mature) < angle to Num(Young)",
                                  "βSize(Mature) < βSize(Young)", "βSpacing(Mature) < βSpacing(Young)"},
                                 timing);
        c7.pass = c7.pass && a.seconds <= 30 * 60;
        report_line(7, c7);
        report_line(8, with_checks(a, {"congruent - incongruent accuracy (Young)"}));
        report_line(9, with_checks(a, {"RSA Young: tau(FA/ConvexHull) >= tau(Num)", "RSA Mature: Num rank improves",
                                       "categorical RDM self-correlation = 1", "noise ceiling lower <= upper"}));

        const DeskRun b = run_desk(cfg, work / "desk_b", !reuse);
        Outcome c10{a.ok && b.ok, {}};
        if (!c10.pass) {
            c10.detail = "desk run failed: " + (a.ok ? b.error : a.error);
        } else {
            int same = 0;
            const auto& tables = report::report_tables();
            for (const auto& t : tables) {
                const auto pa = work / "desk_a" / "report" / t, pb = work / "desk_b" / "report" / t;
                const bool eq = fs::exists(pa) && slurp(pa) == slurp(pb);
                same += eq;
                if (!eq) c10.detail += t + " differs; ";
            }
            c10.pass = same == static_cast<int>(tables.size());
            c10.detail += std::to_string(same) + "/" + std::to_string(tables.size()) + " report files byte-identical";
        }
        report_line(10, c10);
    }

    int failed = 0;
    for (const auto& [id, o] : results) failed += !o.pass;
    std::cout << (failed == 0 ? "all criteria PASS" : std::to_string(failed) + " criteria FAIL") << std::endl;
    return failed == 0 ? 0 : 1;
}
