#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "doctest.h"
#include "numsense/errors.hpp"
#include "numsense/rsa.hpp"

using namespace numsense;
using namespace numsense::rsa;
using stimspace::Feature;
using stimspace::StimulusParams;

namespace {

std::vector<std::string> labels_for(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("c" + std::to_string(i));
    return out;
}

Rdm from_triangle(const std::vector<double>& tri, std::size_t n) {
    Rdm r{labels_for(n), Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
    std::size_t k = 0;
    for (Eigen::Index i = 1; i < r.values.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) r.values(i, j) = r.values(j, i) = tri[k++];
    return r;
}

Rdm random_rdm(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<double> tri(n * (n - 1) / 2);
    for (double& v : tri) v = u(rng);
    return from_triangle(tri, n);
}

// The 3 x 3 x 3 design.
struct Design {
    std::vector<std::string> labels;
    std::vector<StimulusParams> params;
};

Design rsa_design() {
    Design d;
    for (int n : {7, 18, 28})
        for (double sz : {2.60e5, 6.55e5, 10.40e5})
            for (double sp : {0.80e7, 2.02e7, 3.20e7}) {
                d.labels.push_back("n" + std::to_string(n) + "_" + std::to_string(d.labels.size()));
                d.params.emplace_back(n, sz, sp);
            }
    return d;
}

}  // namespace

TEST_CASE("pattern RDM examples") {
    Matrix p(4, 3);
    p << 1, 1, -1, 2, 2, -2, 3, 3, -3, 5, 5, -5;
    const Rdm r = rdm_from_patterns(labels_for(3), p);
    r.validate();
    CHECK(r.values(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.values(0, 2) == doctest::Approx(2.0));
    Matrix flat = Matrix::Ones(4, 2);
    flat(0, 0) = 2;
    CHECK_THROWS_AS(rdm_from_patterns(labels_for(2), flat), NumericalError);
}

TEST_CASE("categorical RDM examples") {
    const std::vector<StimulusParams> ps{{7, 2.6e5, 0.8e7}, {18, 2.6e5, 0.8e7}, {28, 2.6e5, 0.8e7}};
    const Rdm r = compute_categorical_rdm(Feature::Num, labels_for(3), ps);
    r.validate();
    CHECK(r.values(1, 0) == doctest::Approx(1.3625700793847084));
    CHECK(r.values(2, 1) == doctest::Approx(0.6374299206152918));
    CHECK(r.values(2, 0) == doctest::Approx(2.0));
    for (std::size_t i = 0; i < 3; ++i) CHECK(r.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) == 0.0);

    const Design d = rsa_design();
    const Rdm num = compute_categorical_rdm(Feature::Num, d.labels, d.params);
    std::set<long> distinct;
    for (double v : lower_triangle(num))
        if (v != 0.0) distinct.insert(std::lround(v * 1e9));
    CHECK(distinct.size() == 3);
    // With no tied entries the self-correlation is exactly 1.
    CHECK(compare_rdms(r, r) == doctest::Approx(1.0));
}

TEST_CASE("tau-a comparison examples") {
    const Rdm a = from_triangle({1, 2, 3}, 3);
    const Rdm b = from_triangle({1, 3, 2}, 3);
    CHECK(compare_rdms(a, b) == doctest::Approx(1.0 / 3.0));
    CHECK(compare_rdms(a, from_triangle({3, 2, 1}, 3)) == doctest::Approx(-1.0));
    Rdm other = a;
    other.labels[0] = "x";
    CHECK_THROWS_AS(compare_rdms(a, other), ShapeMismatch);
    CHECK(lower_triangle(from_triangle({4, 5, 6}, 3)) == std::vector<double>{4, 5, 6});
}

TEST_CASE("property: tau-a is symmetric and invariant under monotone transforms") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const Rdm a = random_rdm(12, rng), b = random_rdm(12, rng);
        Rdm cubed = a;
        cubed.values = a.values.array().cube().matrix();
        const double tau = compare_rdms(a, b);
        CHECK(compare_rdms(b, a) == doctest::Approx(tau).epsilon(1e-12));
        CHECK(compare_rdms(cubed, b) == doctest::Approx(tau).epsilon(1e-12));
        const Rdm ranked = rank_transform(a);
        ranked.validate();
        CHECK(ranked.values.maxCoeff() == doctest::Approx(1.0));
        CHECK(compare_rdms(ranked, b) == doctest::Approx(tau).epsilon(1e-12));
    }
}

TEST_CASE("noise ceiling and candidate copy of the mean") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.3);
    const Rdm base = random_rdm(10, rng);
    std::vector<Rdm> inst;
    for (int k = 0; k < 8; ++k) {
        Rdm r = base;
        for (Eigen::Index i = 1; i < 10; ++i)
            for (Eigen::Index j = 0; j < i; ++j) r.values(i, j) = r.values(j, i) = base.values(i, j) + noise(rng);
        inst.push_back(r);
    }
    const Rdm mean = mean_rdm(inst);
    const std::vector<Candidate> cands{{"mean", mean}, {"noise", random_rdm(10, rng)}};
    const auto rep = relatedness_and_ceiling(inst, cands, 0.01);
    CHECK(std::abs(rep.candidates[0].mean_tau - rep.ceiling_upper) < 1e-9);
    CHECK(rep.ceiling_lower <= rep.ceiling_upper);
    CHECK(rep.candidates[0].significant);
    REQUIRE(rep.pairwise.size() == 1);
    CHECK(rep.pairwise[0].a == "mean");
    CHECK(candidate_rank(rep, "mean") == 1);
    CHECK(candidate_rank(rep, "noise") == 2);
    CHECK_THROWS_AS(relatedness_and_ceiling(std::span(inst).first(5), cands), InsufficientData);
    const auto j = report_to_json(rep);
    CHECK(j["candidates"].size() == 2);
}

TEST_CASE("pure-noise candidate is rarely significant") {
    int clean = 0;
    for (std::uint64_t rep_seed = 0; rep_seed < 20; ++rep_seed) {
        std::mt19937_64 rng(1000 + rep_seed);
        std::normal_distribution<double> noise(0.0, 0.5);
        const Rdm base = random_rdm(27, rng);
        std::vector<Rdm> inst;
        for (int k = 0; k < 12; ++k) {
            Rdm r = base;
            for (Eigen::Index i = 1; i < 27; ++i)
                for (Eigen::Index j = 0; j < i; ++j) r.values(i, j) = r.values(j, i) = base.values(i, j) + noise(rng);
            inst.push_back(r);
        }
        const std::vector<Candidate> cands{{"noise", random_rdm(27, rng)}};
        clean += !relatedness_and_ceiling(inst, cands, 0.01).candidates[0].significant;
    }
    CHECK(clean >= 19);
}

TEST_CASE("aliased candidates share a rank") {
    const Design d = rsa_design();
    const auto cands = default_candidates(d.labels, d.params);
    REQUIRE(cands.size() == 8);
    const auto fa = std::find_if(cands.begin(), cands.end(), [](const Candidate& c) { return c.name == "FA"; });
    const auto ch = std::find_if(cands.begin(), cands.end(), [](const Candidate& c) { return c.name == "ConvexHull"; });
    REQUIRE(fa != cands.end());
    REQUIRE(ch != cands.end());
    CHECK(fa->rdm.values == ch->rdm.values);

    std::mt19937_64 rng(9);
    std::vector<Rdm> inst;
    for (int k = 0; k < 6; ++k) {
        Rdm r = cands[0].rdm;
        std::normal_distribution<double> noise(0.0, 0.2);
        for (Eigen::Index i = 1; i < 27; ++i)
            for (Eigen::Index j = 0; j < i; ++j) r.values(i, j) = r.values(j, i) = r.values(i, j) + noise(rng);
        inst.push_back(r);
    }
    const auto rep = relatedness_and_ceiling(inst, cands);
    CHECK(candidate_rank(rep, "FA") == candidate_rank(rep, "ConvexHull"));
    CHECK(candidate_rank(rep, "Num") == 1);
}

TEST_CASE("condition means follow manifest conditions") {
    render::DatasetManifest m;
    m.width = m.height = 10;
    for (int k = 0; k < 4; ++k)
        m.images.push_back({"f", {7 + k / 2, 1e5, 1e7}, {}, k, 0, k < 2 ? "a" : "b"});
    Matrix reps(2, 4);
    reps << 1, 3, 5, 7, 0, 2, 4, 6;
    const auto cm = condition_means(reps, m, 2);
    CHECK(cm.labels == std::vector<std::string>{"a", "b"});
    CHECK(cm.means(0, 0) == 2.0);
    CHECK(cm.means(1, 1) == 5.0);
    CHECK_THROWS_AS(condition_means(reps, m, 27), InsufficientData);
}

TEST_CASE("RDM CSV round trip") {
    std::mt19937_64 rng(11);
    const Rdm r = random_rdm(5, rng);
    const auto path = std::filesystem::temp_directory_path() / "numsense_test_rdm.csv";
    write_rdm_csv(path, r);
    const Rdm back = read_rdm_csv(path);
    CHECK(back.labels == r.labels);
    CHECK((back.values - r.values).cwiseAbs().maxCoeff() < 1e-15);
}
