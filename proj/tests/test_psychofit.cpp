#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "numsense/errors.hpp"
#include "numsense/psychofit.hpp"
#include "synthetic.hpp"

using namespace numsense;
using namespace numsense::psychofit;

namespace {

std::filesystem::path scratch_file(const std::string& name, const std::string& body) {
    const auto dir = std::filesystem::temp_directory_path() / "numsense_test_psychofit";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << body;
    return path;
}

}  // namespace

TEST_CASE("choice probability oracles") {
    CHECK(predict_choice_prob({0.3, 2.0, -1.0, 0.5}, 0.0, 1.0, 1.0, 1.0) == doctest::Approx(0.6179114221889526));
    CHECK(predict_choice_prob({}, 0.2, 1.0, 1.0, 1.0) == doctest::Approx(0.5));
    CHECK(predict_choice_prob({0.0, 2.21, 0.0, 0.0}, 0.01, 2.0, 1.0, 1.0) ==
          doctest::Approx(0.9815829446650443).epsilon(1e-12));
    CHECK(predict_choice_prob({1.0, 0.0, 0.0, 0.0}, 0.0, 1.0, 1.0, 1.0) ==
          doctest::Approx(0.8413447460685429).epsilon(1e-12));
    CHECK_THROWS_AS(predict_choice_prob({}, 0.01, 0.0, 1.0, 1.0), DomainError);
}

TEST_CASE("property: probabilities stay inside the lapse band and rise with numerosity") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> lr(-3.0, 3.0), b(-5.0, 5.0);
    for (int t = 0; t < 2000; ++t) {
        const GlmCoefficients c{b(rng), std::abs(b(rng)) + 0.01, b(rng), b(rng)};
        const double gamma = 0.05;
        const double rs = std::exp2(lr(rng)), rsp = std::exp2(lr(rng));
        const double x = lr(rng);
        const double p1 = predict_choice_prob(c, gamma, std::exp2(x), rs, rsp);
        const double p2 = predict_choice_prob(c, gamma, std::exp2(x + 0.01), rs, rsp);
        CHECK(p1 >= gamma / 2);
        CHECK(p1 <= 1 - gamma / 2);
        CHECK(p2 >= p1);
    }
    const GlmCoefficients c{0.0, 1.0, 0.0, 0.0};
    CHECK(predict_choice_prob(c, 0.01, 1.1, 1, 1) > predict_choice_prob(c, 0.01, 1.05, 1, 1));
}

TEST_CASE("analytic gradient matches central differences") {
    const auto pairs = testing::grid_pairs(2000, 3);
    const auto recs = testing::simulate_observer(pairs, {0.1, 2.0, 0.3, -0.2}, 0.01, 4);
    const Beta beta(0.05, 1.7, 0.2, -0.1);
    const Beta g = gradient(beta, 0.01, recs);
    const Eigen::Matrix4d h = hessian(beta, 0.01, recs);
    for (int k = 0; k < 4; ++k) {
        const double eps = 1e-5;
        Beta up = beta, dn = beta;
        up(k) += eps;
        dn(k) -= eps;
        const double fd = (log_likelihood(up, 0.01, recs) - log_likelihood(dn, 0.01, recs)) / (2 * eps);
        CHECK(std::abs(fd - g(k)) / std::max(1.0, std::abs(g(k))) < 1e-5);
        const Beta gfd = (gradient(up, 0.01, recs) - gradient(dn, 0.01, recs)) / (2 * eps);
        for (int j = 0; j < 4; ++j) CHECK(std::abs(gfd(j) - h(j, k)) / std::max(1.0, std::abs(h(j, k))) < 1e-5);
    }
}

TEST_CASE("synthetic observer recovery") {
    const auto pairs = testing::grid_pairs(15200, 11);
    const GlmCoefficients truth{0.0, 2.21, 0.3, 0.3};
    const auto recs = testing::simulate_observer(pairs, truth, 0.01, 12);
    const GlmFit fit = fit_glm(recs);
    CHECK(fit.converged);
    CHECK(fit.n_trials == 15200);
    CHECK(std::abs(fit.coefficients.beta_side - truth.beta_side) < 0.1);
    CHECK(std::abs(fit.coefficients.beta_num - truth.beta_num) < 0.1);
    CHECK(std::abs(fit.coefficients.beta_size - truth.beta_size) < 0.1);
    CHECK(std::abs(fit.coefficients.beta_spacing - truth.beta_spacing) < 0.1);
    CHECK(fit.pseudo_r2 > 0.0);
    CHECK(fit.pseudo_r2_adjusted < fit.pseudo_r2);
    CHECK(fit.chi_square_dof == 3);
    CHECK(fit.chi_square_p < 1e-6);
    CHECK(fit.log_likelihood >= fit.null_log_likelihood);
    CHECK(gradient(fit.coefficients.as_vector(), 0.01, recs).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("coin-flip observer is null") {
    const auto pairs = testing::grid_pairs(5000, 21);
    int null_ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(100 + seed);
        std::vector<ChoiceRecord> recs;
        for (const auto& p : pairs) {
            const Side choice = (rng() >> 63) ? Side::Right : Side::Left;
            recs.push_back({p.pair_id, p.r_num, p.r_size, p.r_spacing, choice, choice == p.correct_side, {}});
        }
        const GlmFit fit = fit_glm(recs);
        const auto b = fit.coefficients.as_vector();
        null_ok += b.cwiseAbs().maxCoeff() < 0.06 && fit.chi_square_p >= 0.05;
    }
    CHECK(null_ok >= 18);
}

TEST_CASE("constant regressor is unidentifiable") {
    auto pairs = testing::grid_pairs(2000, 31);
    for (auto& p : pairs) p.r_size = 1.0;
    const auto recs = testing::simulate_observer(pairs, {0.0, 2.0, 0.0, 0.4}, 0.01, 32);
    const GlmFit fit = fit_glm(recs);
    CHECK_FALSE(fit.identifiable[1]);
    CHECK(fit.identifiable[0]);
    CHECK(fit.identifiable[2]);
    CHECK(fit.coefficients.beta_size == 0.0);
    CHECK(fit.chi_square_dof == 2);
    CHECK(std::abs(fit.coefficients.beta_num - 2.0) < 0.2);
}

TEST_CASE("swap symmetry") {
    const auto pairs = testing::grid_pairs(3000, 41);
    auto recs = testing::simulate_observer(pairs, {0.2, 1.5, 0.4, -0.3}, 0.01, 42);
    const GlmFit a = fit_glm(recs);
    for (auto& r : recs) {
        r.r_num = 1.0 / r.r_num;
        r.r_size = 1.0 / r.r_size;
        r.r_spacing = 1.0 / r.r_spacing;
        r.choice = opposite(r.choice);
    }
    const GlmFit b = fit_glm(recs);
    CHECK(b.coefficients.beta_side == doctest::Approx(-a.coefficients.beta_side).epsilon(1e-6));
    CHECK(std::abs(b.coefficients.beta_num - a.coefficients.beta_num) < 1e-6);
    CHECK(std::abs(b.coefficients.beta_size - a.coefficients.beta_size) < 1e-6);
    CHECK(std::abs(b.coefficients.beta_spacing - a.coefficients.beta_spacing) < 1e-6);
}

TEST_CASE("fit errors and gamma search") {
    const auto pairs = testing::grid_pairs(400, 51);
    const auto recs = testing::simulate_observer(pairs, {0.0, 2.0, 0.1, 0.1}, 0.03, 52);
    CHECK_THROWS_AS(fit_glm(std::span(recs).first(49)), InsufficientData);
    const auto grid = default_gamma_grid();
    CHECK(grid.size() == 11);
    CHECK(grid.back() == doctest::Approx(0.05));
    const GlmFit best = fit_glm_gamma_search(recs, grid);
    for (double g : grid) {
        GlmOptions o;
        o.gamma = g;
        CHECK(best.log_likelihood >= fit_glm(recs, o).log_likelihood - 1e-9);
    }
}

TEST_CASE("weber fraction") {
    CHECK(weber_fraction(2.2097) == doctest::Approx(0.320).epsilon(5e-4));
    CHECK(weber_fraction(3.2141) == doctest::Approx(0.220).epsilon(5e-4));
    CHECK(weber_fraction(2.2097) == doctest::Approx(0.3200012586).epsilon(1e-9));
    CHECK(weber_fraction(3.2141) == doctest::Approx(0.2200014876).epsilon(1e-9));
    CHECK(weber_fraction(1.0 / std::sqrt(2.0)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(weber_fraction(0.0), DomainError);
    CHECK_THROWS_AS(weber_fraction(-1.0), DomainError);
}

TEST_CASE("human ingestion applies both outlier rules") {
    std::string body = "trial_id,r_num,r_size,r_spacing,choice,rt_ms\n";
    // Ratio 0.85 bin: nineteen ordinary rts and one slow outlier.
    for (int i = 0; i < 19; ++i) body += std::to_string(i) + ",0.85,1,1,left," + std::to_string(400 + 10 * i) + "\n";
    body += "19,0.85,1,1,left,3000\n";
    // Ratio 0.55 bin: one response faster than the presentation time.
    body += "20,0.55,1,1,right,180\n21,0.55,1,1,right,600\n22,0.55,1,1,right,640\n";
    const auto r = ingest_trials(scratch_file("human.csv", body), Protocol::Human);
    CHECK(r.rows == 23);
    CHECK(r.dropped_presentation == 1);
    CHECK(r.dropped_slow == 1);
    CHECK(r.records.size() == 21);
    for (const auto& rec : r.records) {
        CHECK(rec.id != 19);
        CHECK(rec.id != 20);
    }
    CHECK(r.records.front().correct);
}

TEST_CASE("model ingestion keeps every row") {
    std::string body = "pair_id,r_num,r_size,r_spacing,choice,correct\n";
    for (int i = 0; i < 15200; ++i) body += std::to_string(i) + ",2,0.5,1.5,right,1\n";
    const auto r = ingest_trials(scratch_file("model.csv", body), Protocol::Model);
    CHECK(r.records.size() == 15200);
    CHECK(r.dropped_presentation + r.dropped_slow == 0);
}

TEST_CASE("schema errors name the row") {
    const std::string body = "trial_id,r_num,r_size,r_spacing,choice,rt_ms\n1,2,1,1,left,500\n2,abc,1,1,left,500\n";
    try {
        ingest_trials(scratch_file("bad.csv", body), Protocol::Human);
        FAIL("expected a schema error");
    } catch (const SchemaError& ex) {
        CHECK(std::string(ex.what()).find("row 3") != std::string::npos);
    }
    CHECK_THROWS_AS(ingest_trials(scratch_file("hdr.csv", "a,b\n"), Protocol::Model), SchemaError);
    const std::string no_rt = "trial_id,r_num,r_size,r_spacing,choice,rt_ms\n1,2,1,1,left,\n";
    CHECK_THROWS_AS(ingest_trials(scratch_file("nort.csv", no_rt), Protocol::Human), SchemaError);
}

TEST_CASE("fit CSV round trip") {
    const auto pairs = testing::grid_pairs(1000, 61);
    const auto recs = testing::simulate_observer(pairs, {0.1, 2.0, 0.2, 0.2}, 0.01, 62);
    std::vector<NamedFit> fits{{"net01_young", fit_glm(recs)}};
    fits[0].fit.chi_square_p = 5.3704352705481407e-317;
    const auto path = scratch_file("fits.csv", "");
    write_fits_csv(path, fits);
    const auto back = read_fits_csv(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].id == "net01_young");
    CHECK(back[0].fit.coefficients.beta_num == doctest::Approx(fits[0].fit.coefficients.beta_num).epsilon(1e-12));
    CHECK(back[0].fit.converged == fits[0].fit.converged);
    CHECK(back[0].fit.chi_square_p == fits[0].fit.chi_square_p);
}
