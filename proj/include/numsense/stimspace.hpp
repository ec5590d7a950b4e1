#pragma once

// Three-dimensional (Numerosity, Size, Spacing) stimulus space and the
// non-numerical features derived from it.
//
// Size = TSA * ISA and Spacing = FA * Spar, both in pixels^4. After taking
// log2 of every axis, each feature is a linear function of
// (log2 n, log2 Size, log2 Spacing), which is what makes the projection and
// angle analyses in geometry.hpp meaningful.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace numsense::stimspace {

enum class Feature {
    Num,
    Size,
    Spacing,
    TSA,
    ISA,
    FA,
    Spar,
    TP,
    IP,
    Cov,
    AC,
};

inline constexpr std::array<Feature, 11> kAllFeatures = {
    Feature::Num, Feature::Size, Feature::Spacing, Feature::TSA, Feature::ISA, Feature::FA,
    Feature::Spar, Feature::TP, Feature::IP, Feature::Cov, Feature::AC,
};

std::string_view feature_name(Feature f);
std::optional<Feature> parse_feature(std::string_view name);

/// A point of the stimulus space. Construction enforces n >= 1, size > 0,
/// spacing > 0 and spacing >= size (field area can never be smaller than the
/// total dot area).
class StimulusParams {
public:
    StimulusParams(int n, double size, double spacing);

    int n() const noexcept { return n_; }
    double size() const noexcept { return size_; }
    double spacing() const noexcept { return spacing_; }

    /// Same stimulus expressed on a canvas whose lengths are scaled by `length_scale`
    /// (areas by its square, Size and Spacing by its fourth power).
    StimulusParams scaled(double length_scale) const;

    friend bool operator==(const StimulusParams&, const StimulusParams&) = default;

private:
    int n_;
    double size_;
    double spacing_;
};

struct FeatureVector {
    double tsa;   // px^2
    double isa;   // px^2
    double fa;    // px^2
    double spar;  // px^2
    double tp;    // px
    double ip;    // px
    double cov;
    double ac;  // px^4
};

FeatureVector derive_features(const StimulusParams& p);

/// Value of any feature (including the three axes themselves) at `p`.
double feature_value(const StimulusParams& p, Feature f);

struct LogPoint {
    double x;  // log2 n
    double y;  // log2 Size
    double z;  // log2 Spacing
};

LogPoint to_log_point(const StimulusParams& p);

/// Inverse of to_log_point. n is rounded to the nearest integer.
StimulusParams from_log_point(const LogPoint& lp);

using Vec3 = std::array<double, 3>;

/// log2 coefficients of a feature on (log2 n, log2 Size, log2 Spacing), constant
/// terms dropped. E.g. TP -> (3/4, 1/4, 0).
Vec3 log_coefficients(Feature f);

struct FeatureAxis {
    Feature feature;
    Vec3 direction;  // unit length
};

FeatureAxis feature_axis(Feature f);

struct Range {
    double lo;
    double hi;
};

struct GridSpec {
    Range n_range{7, 28};
    Range size_range{2.6e5, 10.4e5};
    Range spacing_range{0.8e7, 3.2e7};
    std::array<int, 3> levels{13, 13, 13};
};

/// `count` values evenly spaced on a log scale, endpoints included.
std::vector<double> log_levels(Range r, int count);

/// Log-spaced numerosity levels rounded to the nearest integer. Throws
/// DomainError if two levels round to the same integer.
std::vector<int> numerosity_levels(Range r, int count);

/// Cartesian product of the three level ladders, n varying slowest.
std::vector<StimulusParams> build_grid(const GridSpec& spec);

}  // namespace numsense::stimspace
