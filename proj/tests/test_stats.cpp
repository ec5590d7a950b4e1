#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "numsense/errors.hpp"
#include "numsense/stats.hpp"

using namespace numsense;
using namespace numsense::stats;

TEST_CASE("signed-rank exact small cases") {
    const std::vector<double> d{1, 2, 3};
    const auto r = wilcoxon_signed_rank(d, Alternative::Greater);
    CHECK(r.exact());
    CHECK(r.statistic == 6.0);
    CHECK(r.p_value == doctest::Approx(0.125));
    const std::vector<double> one{5};
    CHECK(wilcoxon_signed_rank(one, Alternative::Greater).p_value == doctest::Approx(0.5));
    // Two-sided doubles the smaller tail.
    CHECK(wilcoxon_signed_rank(d, Alternative::TwoSided).p_value == doctest::Approx(0.25));
    CHECK(wilcoxon_signed_rank(d, Alternative::Less).p_value == doctest::Approx(1.0));
}

TEST_CASE("signed-rank drops zeros") {
    const std::vector<double> d{0, 0, 1, 2, 3};
    const auto r = wilcoxon_signed_rank(d, Alternative::Greater);
    CHECK(r.n == 3);
    CHECK(r.p_value == doctest::Approx(0.125));
    const std::vector<double> zeros{0, 0, 0};
    CHECK_THROWS_AS(wilcoxon_signed_rank(zeros, Alternative::Greater), InsufficientData);
}

TEST_CASE("Mann-Whitney exact") {
    const std::vector<double> x{1, 2}, y{3, 4};
    const auto r = mann_whitney_u(x, y, Alternative::Less);
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == doctest::Approx(1.0 / 6.0));
    CHECK(mann_whitney_u(x, y, Alternative::Greater).p_value == doctest::Approx(1.0));
    CHECK(mann_whitney_u(x, y, Alternative::TwoSided).p_value == doctest::Approx(1.0 / 3.0));
    const std::vector<double> same{2, 2, 2};
    CHECK(mann_whitney_u(same, same, Alternative::TwoSided).p_value == doctest::Approx(1.0));
}

TEST_CASE("t-tests") {
    const std::vector<double> x{1, 2, 3};
    const auto r = one_sample_t(x, 0.0);
    CHECK(r.statistic == doctest::Approx(3.4641016151377544));
    CHECK(r.dof == 2.0);
    // 2 * (1 - T_2(2 sqrt 3)) = 0.07417990022744858
    CHECK(r.p_value == doctest::Approx(0.07417990022744858).epsilon(1e-9));
    const std::vector<double> flat{4, 4, 4};
    CHECK_THROWS_AS(one_sample_t(flat, 0.0), InsufficientData);
    const std::vector<double> y{0, 0, 0};
    CHECK(paired_t(x, y).statistic == doctest::Approx(r.statistic));
}

TEST_CASE("sign test") {
    const std::vector<double> d{1, 2, 3, 4, 5, 6};
    const auto r = sign_test(d, Alternative::Greater);
    CHECK(r.statistic == 6.0);
    CHECK(r.p_value == doctest::Approx(1.0 / 64.0));
    const std::vector<double> five{1, 2, 3, 4, 5, -1};
    CHECK(sign_test(five, Alternative::Greater).p_value == doctest::Approx(7.0 / 64.0));
}

TEST_CASE("Kendall tau-a") {
    const std::vector<double> x{1, 2, 3}, y{1, 3, 2};
    CHECK(kendall_tau_a(x, y) == doctest::Approx(1.0 / 3.0));
    CHECK(kendall_tau_a(x, x) == doctest::Approx(1.0));
    const std::vector<double> tied{1, 1, 2};
    CHECK(kendall_tau_a(tied, tied) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("property: fast tau-a equals the naive count") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> level(0, 4);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(t % 40);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = level(rng);
            y[i] = level(rng);
        }
        CHECK(kendall_tau_a(x, y) == doctest::Approx(kendall_tau_a_naive(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("Benjamini-Hochberg") {
    const std::vector<double> p{0.001, 0.008, 0.039, 0.041};
    const auto bh = bh_fdr(p, 0.05);
    CHECK(bh.rejected_count == 4);
    const auto bf = bonferroni(p, 0.05);
    CHECK(bf.rejected_count == 2);
    const std::vector<double> none{0.5, 0.9};
    CHECK(bh_fdr(none, 0.05).rejected_count == 0);
}

TEST_CASE("property: BH rejects a superset of Bonferroni") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> p(1 + t % 12);
        for (double& v : p) v = u(rng);
        const auto bh = bh_fdr(p, 0.05);
        const auto bf = bonferroni(p, 0.05);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (bf.rejected[i]) CHECK(bh.rejected[i]);
        }
    }
}

TEST_CASE("property: p-values lie in [0, 1]") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.2, 1.0);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(t % 40);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = std::round(g(rng) * 3.0) / 3.0;
            y[i] = std::round(g(rng) * 3.0) / 3.0;
        }
        if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) continue;
        for (auto alt : {Alternative::TwoSided, Alternative::Less, Alternative::Greater}) {
            const double a = wilcoxon_signed_rank(x, alt).p_value;
            const double b = mann_whitney_u(x, y, alt).p_value;
            const double c = sign_test(x, alt).p_value;
            CHECK(a >= 0.0);
            CHECK(a <= 1.0);
            CHECK(b >= 0.0);
            CHECK(b <= 1.0);
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
        }
    }
}

TEST_CASE("exact and normal paths agree at the crossover") {
    std::vector<double> d;
    for (int i = 1; i <= 25; ++i) d.push_back((i % 3 == 0 ? -1.0 : 1.0) * i);
    const auto exact = wilcoxon_signed_rank(d, Alternative::TwoSided, Path::Exact);
    const auto normal = wilcoxon_signed_rank(d, Alternative::TwoSided, Path::Normal);
    CHECK(exact.exact());
    CHECK_FALSE(normal.exact());
    CHECK(std::abs(exact.p_value - normal.p_value) < 0.01);

    const std::vector<double> x{1.1, 2.3, 3.0, 4.2, 5.5, 6.1}, y{2.0, 3.5, 4.1, 6.6, 7.2, 8.0};
    const auto ue = mann_whitney_u(x, y, Alternative::TwoSided, Path::Exact);
    const auto un = mann_whitney_u(x, y, Alternative::TwoSided, Path::Normal);
    CHECK(std::abs(ue.p_value - un.p_value) < 0.03);
}

TEST_CASE("descriptive helpers") {
    const std::vector<double> x{3, 1, 2, 2};
    CHECK(mean(x) == doctest::Approx(2.0));
    CHECK(median(x) == doctest::Approx(2.0));
    CHECK(sample_sd(x) == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(midranks(x) == std::vector<double>{4.0, 1.0, 2.5, 2.5});
    const std::vector<double> a{1, 2, 3}, b{2, 4, 6};
    CHECK(pearson(a, b) == doctest::Approx(1.0));
    CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429));
}
