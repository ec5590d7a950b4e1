#pragma once

// Rank tests, t-tests, correlations and multiple-comparison corrections.
//
// Rank tests use midranks for ties. Small samples are handled by exact
// enumeration of the permutation distribution; larger ones by the normal
// approximation with tie-corrected variance and a 0.5 continuity correction.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace numsense::stats {

enum class Alternative { TwoSided, Less, Greater };

enum class Method { Exact, Normal, StudentT, Binomial };

/// Which p-value path a rank test takes.
enum class Path { Auto, Exact, Normal };

struct TestResult {
    double statistic = 0.0;  // W+ (signed rank), U_x (Mann-Whitney), t, or #positives (sign)
    double p_value = 1.0;
    Method method = Method::Exact;
    std::size_t n = 0;   // effective sample size (nonzero differences / first sample)
    std::size_t n2 = 0;  // second sample size, two-sample tests only
    Alternative alternative = Alternative::TwoSided;
    double z = std::numeric_limits<double>::quiet_NaN();    // normal path only
    double dof = std::numeric_limits<double>::quiet_NaN();  // t-tests only

    bool exact() const { return method == Method::Exact || method == Method::Binomial; }
    bool one_sided() const { return alternative != Alternative::TwoSided; }
};

inline constexpr std::size_t kSignedRankExactMax = 25;
inline constexpr std::size_t kMannWhitneyExactMaxTotal = 12;

/// Signed-rank test of the differences against a zero-centred distribution.
/// Zeros are dropped. Greater tests for a positive shift.
TestResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alt, Path path = Path::Auto,
                                std::size_t exact_max = kSignedRankExactMax);

/// Rank-sum test. Less tests whether x tends to be smaller than y; the
/// statistic is U_x = R_x - n_x (n_x + 1) / 2.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, Alternative alt,
                          Path path = Path::Auto, std::size_t exact_max_total = kMannWhitneyExactMaxTotal);

TestResult one_sample_t(std::span<const double> x, double mu0, Alternative alt = Alternative::TwoSided);
/// One-sample t on x - y.
TestResult paired_t(std::span<const double> x, std::span<const double> y, Alternative alt = Alternative::TwoSided);

/// Binomial sign test on the nonzero differences.
TestResult sign_test(std::span<const double> diffs, Alternative alt);

/// (concordant - discordant) / (n (n - 1) / 2); tied pairs count as neither.
/// O(n log n) merge-sort count.
double kendall_tau_a(std::span<const double> x, std::span<const double> y);
/// Same statistic by direct O(n^2) pair enumeration.
double kendall_tau_a_naive(std::span<const double> x, std::span<const double> y);

double pearson(std::span<const double> x, std::span<const double> y);

struct Correction {
    std::vector<bool> rejected;  // input order
    std::size_t rejected_count = 0;
};

/// Benjamini-Hochberg step-up at level q.
Correction bh_fdr(std::span<const double> p_values, double q);
/// Rejects p * m <= alpha.
Correction bonferroni(std::span<const double> p_values, double alpha);
/// min(1, p * m) per hypothesis.
std::vector<double> bonferroni_adjust(std::span<const double> p_values);

double mean(std::span<const double> x);
double sample_sd(std::span<const double> x);
double median(std::span<const double> x);
std::vector<double> midranks(std::span<const double> x);

/// Mean difference over pooled standard deviation.
double cohens_d(std::span<const double> x, std::span<const double> y);
double eta_squared(double ss_effect, double ss_total);

double normal_cdf(double z);

}  // namespace numsense::stats
