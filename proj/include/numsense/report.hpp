#pragma once

// Tables and directional checks assembled from the fit, geometry, task and
// RSA artifacts of a pipeline run.

#include <filesystem>
#include <string>
#include <vector>

#include "numsense/config.hpp"
#include "numsense/pipeline.hpp"
#include "numsense/psychofit.hpp"

namespace numsense::report {

/// A report input file is absent.
class MissingInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NetworkResult {
    int net = 0;  // 1-based
    std::string tag;
    psychofit::GlmCoefficients beta;
    double weber = 0.0;  // NaN when beta_num <= 0
    double pseudo_r2_adjusted = 0.0;
    double angle_num = 0.0;
    double accuracy = 0.0;
    std::size_t congruent_n = 0;
    double congruent_accuracy = 0.0;
    std::size_t incongruent_n = 0;
    double incongruent_accuracy = 0.0;
};

/// Young vs Mature comparison of one per-network measure.
struct DevelopmentRow {
    std::string measure;
    bool expect_increase = true;
    double median_young = 0.0;
    double median_mature = 0.0;
    double u = 0.0;             // Mann-Whitney U of the Mature sample
    double p_u = 1.0;           // one-sided in the expected direction
    std::size_t improved = 0;   // networks moving in the expected direction
    std::size_t n = 0;
    double p_sign = 1.0;        // one-sided sign test over paired networks
    bool median_moves = false;  // medians move in the expected direction
};

struct RsaCandidate {
    std::string name;
    double mean_tau = 0.0;
    double median_tau = 0.0;
    double p = 1.0;
    bool significant = false;
    int rank = 0;
};

struct RsaSummary {
    std::string tag;
    std::vector<RsaCandidate> candidates;
    double ceiling_lower = 0.0;
    double ceiling_upper = 0.0;

    const RsaCandidate& at(const std::string& name) const;
};

struct Check {
    std::string claim;
    bool pass = false;
    std::string detail;
};

struct ReportData {
    std::vector<NetworkResult> young;
    std::vector<NetworkResult> mature;
    std::vector<DevelopmentRow> development;
    RsaSummary rsa_young;
    RsaSummary rsa_mature;
    bool categorical_self_tau_one = false;
    std::vector<Check> checks;

    const Check& check(const std::string& claim_prefix) const;
};

/// Largest one-sided sign-test p accepted for a directional claim over networks.
inline constexpr double kSignTestAlpha = 0.11;
/// Young congruent-minus-incongruent accuracy margin, in percentage points.
inline constexpr double kCongruencyMarginPp = 5.0;

/// Reads the stage outputs and evaluates the directional checks. Throws
/// MissingInput naming the first absent file.
ReportData collect(const pipeline::Layout& layout, const ExperimentConfig& cfg);

/// Writes report/{coefficients,angles,development,congruency,accuracy,rsa}.csv
/// and report/summary.txt.
ReportData emit_report(const pipeline::Layout& layout, const ExperimentConfig& cfg);

/// The report CSV file names, in emission order.
const std::vector<std::string>& report_tables();

}  // namespace numsense::report
