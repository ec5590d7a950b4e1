#include "numsense/stimspace.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "numsense/errors.hpp"

namespace numsense::stimspace {

namespace {

constexpr std::array<std::string_view, 11> kNames = {
    "Num", "Size", "Spacing", "TSA", "ISA", "FA", "Spar", "TP", "IP", "Cov", "AC",
};

}  // namespace

std::string_view feature_name(Feature f) { return kNames[static_cast<std::size_t>(f)]; }

std::optional<Feature> parse_feature(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) return static_cast<Feature>(i);
    }
    return std::nullopt;
}

StimulusParams::StimulusParams(int n, double size, double spacing)
    : n_(n), size_(size), spacing_(spacing) {
    if (n < 1) throw DomainError("numerosity must be >= 1, got " + std::to_string(n));
    if (!(size > 0.0) || !std::isfinite(size)) throw DomainError("size must be positive and finite");
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DomainError("spacing must be positive and finite");
    if (spacing < size) {
        std::ostringstream msg;
        msg << "spacing (" << spacing << ") < size (" << size << "): field area would be smaller than total dot area";
        throw DomainError(msg.str());
    }
}

StimulusParams StimulusParams::scaled(double length_scale) const {
    if (!(length_scale > 0.0)) throw DomainError("length scale must be positive");
    const double s4 = std::pow(length_scale, 4);
    return StimulusParams(n_, size_ * s4, spacing_ * s4);
}

FeatureVector derive_features(const StimulusParams& p) {
    const double n = p.n();
    const double sz = p.size();
    const double sp = p.spacing();
    const double two_sqrt_pi = 2.0 * std::sqrt(std::numbers::pi);
    FeatureVector f{};
    f.tsa = std::sqrt(sz * n);
    f.isa = std::sqrt(sz / n);
    f.fa = std::sqrt(sp * n);
    f.spar = std::sqrt(sp / n);
    f.tp = two_sqrt_pi * std::pow(sz, 0.25) * std::pow(n, 0.75);
    f.ip = two_sqrt_pi * std::pow(sz, 0.25) * std::pow(n, -0.25);
    f.cov = std::sqrt(sz / sp);
    f.ac = std::sqrt(sz * sp);
    return f;
}

double feature_value(const StimulusParams& p, Feature f) {
    const FeatureVector v = derive_features(p);
    switch (f) {
        case Feature::Num: return p.n();
        case Feature::Size: return p.size();
        case Feature::Spacing: return p.spacing();
        case Feature::TSA: return v.tsa;
        case Feature::ISA: return v.isa;
        case Feature::FA: return v.fa;
        case Feature::Spar: return v.spar;
        case Feature::TP: return v.tp;
        case Feature::IP: return v.ip;
        case Feature::Cov: return v.cov;
        case Feature::AC: return v.ac;
    }
    return 0.0;
}

LogPoint to_log_point(const StimulusParams& p) {
    return {std::log2(static_cast<double>(p.n())), std::log2(p.size()), std::log2(p.spacing())};
}

StimulusParams from_log_point(const LogPoint& lp) {
    return StimulusParams(static_cast<int>(std::lround(std::exp2(lp.x))), std::exp2(lp.y), std::exp2(lp.z));
}

Vec3 log_coefficients(Feature f) {
    switch (f) {
        case Feature::Num: return {1.0, 0.0, 0.0};
        case Feature::Size: return {0.0, 1.0, 0.0};
        case Feature::Spacing: return {0.0, 0.0, 1.0};
        case Feature::TSA: return {0.5, 0.5, 0.0};
        case Feature::ISA: return {-0.5, 0.5, 0.0};
        case Feature::FA: return {0.5, 0.0, 0.5};
        case Feature::Spar: return {-0.5, 0.0, 0.5};
        case Feature::TP: return {0.75, 0.25, 0.0};
        case Feature::IP: return {-0.25, 0.25, 0.0};
        case Feature::Cov: return {0.0, 0.5, -0.5};
        case Feature::AC: return {0.0, 0.5, 0.5};
    }
    return {0.0, 0.0, 0.0};
}

FeatureAxis feature_axis(Feature f) {
    Vec3 c = log_coefficients(f);
    const double norm = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    for (double& x : c) x /= norm;
    return {f, c};
}

std::vector<double> log_levels(Range r, int count) {
    if (!(r.lo > 0.0) || !(r.hi >= r.lo)) throw DomainError("log levels need 0 < lo <= hi");
    if (count < 1) throw DomainError("level count must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(count));
    if (count == 1) {
        out[0] = r.lo;
        return out;
    }
    const double llo = std::log2(r.lo);
    const double step = (std::log2(r.hi) - llo) / (count - 1);
    for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = std::exp2(llo + step * k);
    out.front() = r.lo;
    out.back() = r.hi;
    return out;
}

std::vector<int> numerosity_levels(Range r, int count) {
    std::vector<int> out;
    for (double v : log_levels(r, count)) {
        const int n = static_cast<int>(std::lround(v));
        if (!out.empty() && out.back() == n) {
            throw DomainError("numerosity levels collide at n=" + std::to_string(n) +
                              " after rounding; use fewer levels or a wider range");
        }
        out.push_back(n);
    }
    return out;
}

std::vector<StimulusParams> build_grid(const GridSpec& spec) {
    for (int l : spec.levels) {
        if (l < 2) throw DomainError("levels per dimension must be >= 2");
    }
    if (spec.n_range.lo < 1.0) throw DomainError("numerosity range must start at >= 1");
    const auto ns = numerosity_levels(spec.n_range, spec.levels[0]);
    const auto sizes = log_levels(spec.size_range, spec.levels[1]);
    const auto spacings = log_levels(spec.spacing_range, spec.levels[2]);
    std::vector<StimulusParams> grid;
    grid.reserve(ns.size() * sizes.size() * spacings.size());
    for (int n : ns) {
        for (double sz : sizes) {
            for (double sp : spacings) grid.emplace_back(n, sz, sp);
        }
    }
    return grid;
}

}  // namespace numsense::stimspace
