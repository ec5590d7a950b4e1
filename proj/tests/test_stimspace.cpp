#include <cmath>
#include <random>

#include "doctest.h"
#include "numsense/errors.hpp"
#include "numsense/stimspace.hpp"

using namespace numsense;
using namespace numsense::stimspace;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

StimulusParams random_params(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n(1, 64);
    std::uniform_real_distribution<double> lsz(8.0, 22.0);
    std::uniform_real_distribution<double> extra(0.0, 8.0);
    const double size = std::exp2(lsz(rng));
    return {n(rng), size, size * std::exp2(extra(rng))};
}

}  // namespace

TEST_CASE("features at a mid-grid point match closed forms") {
    const auto f = derive_features({18, 6.55e5, 2.02e7});
    // Frozen from an independent double-precision evaluation.
    CHECK(f.tsa == doctest::Approx(3433.656942677879).epsilon(1e-12));
    CHECK(f.isa == doctest::Approx(190.75871903765994).epsilon(1e-12));
    CHECK(f.fa == doctest::Approx(19068.298298484846).epsilon(1e-12));
    CHECK(f.spar == doctest::Approx(1059.3499054713802).epsilon(1e-12));
    CHECK(f.tp == doctest::Approx(881.2916104653656).epsilon(1e-12));
    CHECK(f.ip == doctest::Approx(48.96064502585365).epsilon(1e-12));
    CHECK(f.cov == doctest::Approx(0.1800714929528198).epsilon(1e-12));
    CHECK(f.ac == doctest::Approx(3637444.1576469596).epsilon(1e-12));
}

TEST_CASE("single dot with equal size and spacing collapses totals and items") {
    const auto f = derive_features({1, 4.0, 4.0});
    CHECK(f.tsa == 2.0);
    CHECK(f.isa == 2.0);
    CHECK(f.fa == 2.0);
    CHECK(f.spar == 2.0);
    CHECK(f.cov == 1.0);
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(StimulusParams(0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(StimulusParams(3, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS(StimulusParams(3, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(StimulusParams(3, 2.0, 1.0), DomainError);
    CHECK_NOTHROW(StimulusParams(3, 2.0, 2.0));
}

TEST_CASE("feature axes") {
    const auto num = feature_axis(Feature::Num).direction;
    CHECK(num[0] == 1.0);
    CHECK(num[1] == 0.0);
    CHECK(num[2] == 0.0);
    const auto tsa = feature_axis(Feature::TSA).direction;
    CHECK(tsa[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(tsa[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    const auto tp = feature_axis(Feature::TP).direction;
    CHECK(tp[0] == doctest::Approx(3.0 / std::sqrt(10.0)).epsilon(1e-15));
    CHECK(tp[1] == doctest::Approx(1.0 / std::sqrt(10.0)).epsilon(1e-15));
    CHECK(tp[2] == 0.0);

    for (Feature f : kAllFeatures) {
        const auto d = feature_axis(f).direction;
        CHECK(std::abs(d[0] * d[0] + d[1] * d[1] + d[2] * d[2] - 1.0) < 1e-12);
    }
    CHECK(feature_axis(Feature::ISA).direction == feature_axis(Feature::IP).direction);
    const auto isa = feature_axis(Feature::ISA).direction;
    CHECK(isa[0] == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(isa[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("orthogonal base axes") {
    const auto a = feature_axis(Feature::Num).direction;
    const auto b = feature_axis(Feature::Size).direction;
    const auto c = feature_axis(Feature::Spacing).direction;
    auto dot = [](const Vec3& x, const Vec3& y) { return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]; };
    CHECK(dot(a, b) == 0.0);
    CHECK(dot(a, c) == 0.0);
    CHECK(dot(b, c) == 0.0);
}

TEST_CASE("property: identities and log-linearity over random parameters") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const StimulusParams p = random_params(rng);
        const StimulusParams q = random_params(rng);
        const auto f = derive_features(p);
        CHECK(rel(f.tsa / f.isa, p.n()) < 1e-9);
        CHECK(rel(f.fa / f.spar, p.n()) < 1e-9);
        CHECK(rel(f.tp / f.ip, p.n()) < 1e-9);
        CHECK(rel(f.tsa * f.isa, p.size()) < 1e-9);
        CHECK(rel(f.fa * f.spar, p.spacing()) < 1e-9);
        const LogPoint lp = to_log_point(p), lq = to_log_point(q);
        for (Feature ft : kAllFeatures) {
            const Vec3 k = log_coefficients(ft);
            const double lhs = std::log2(feature_value(p, ft) / feature_value(q, ft));
            const double rhs = k[0] * (lp.x - lq.x) + k[1] * (lp.y - lq.y) + k[2] * (lp.z - lq.z);
            CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)));
        }
    }
}

TEST_CASE("log point round trip") {
    const StimulusParams p(18, 6.55e5, 2.02e7);
    const StimulusParams back = from_log_point(to_log_point(p));
    CHECK(back.n() == 18);
    CHECK(rel(back.size(), p.size()) < 1e-12);
    CHECK(rel(back.spacing(), p.spacing()) < 1e-12);
}

TEST_CASE("grid levels") {
    const auto n = numerosity_levels({7, 28}, 13);
    CHECK(n == std::vector<int>{7, 8, 9, 10, 11, 12, 14, 16, 18, 20, 22, 25, 28});
    CHECK(numerosity_levels({7, 28}, 2) == std::vector<int>{7, 28});
    CHECK_THROWS_AS(numerosity_levels({7, 9}, 8), DomainError);

    const auto sz = log_levels({2.6e5, 10.4e5}, 13);
    CHECK(sz.front() == 2.6e5);
    CHECK(sz.back() == 10.4e5);
    CHECK(sz[6] == doctest::Approx(5.2e5));

    const auto grid = build_grid(GridSpec{});
    CHECK(grid.size() == 2197);
    CHECK(grid.front().n() == 7);
    CHECK(grid[1].n() == 7);
    CHECK(grid.back().n() == 28);

    GridSpec tiny;
    tiny.levels = {2, 2, 2};
    CHECK(build_grid(tiny).size() == 8);
}

TEST_CASE("feature names round trip") {
    for (Feature f : kAllFeatures) CHECK(parse_feature(feature_name(f)) == f);
    CHECK_FALSE(parse_feature("Bogus").has_value());
}
