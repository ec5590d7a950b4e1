#pragma once

// Probit GLM with a symmetric lapse term:
//   z = bSide + bNum log2(r_num) + bSize log2(r_size) + bSpacing log2(r_spacing)
//   P(right) = gamma / 2 + (1 - gamma) Phi(z)
// fitted by maximum likelihood with gamma held fixed.

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "numsense/choice.hpp"

namespace numsense::psychofit {

/// Order: side, num, size, spacing.
using Beta = Eigen::Vector4d;

struct GlmCoefficients {
    double beta_side = 0.0;
    double beta_num = 0.0;
    double beta_size = 0.0;
    double beta_spacing = 0.0;

    Beta as_vector() const { return {beta_side, beta_num, beta_size, beta_spacing}; }
    static GlmCoefficients from_vector(const Beta& b) { return {b(0), b(1), b(2), b(3)}; }
};

double predict_choice_prob(const GlmCoefficients& c, double gamma, double r_num, double r_size, double r_spacing);

/// Log-likelihood of the records and its derivatives in beta.
double log_likelihood(const Beta& beta, double gamma, std::span<const ChoiceRecord> records);
Beta gradient(const Beta& beta, double gamma, std::span<const ChoiceRecord> records);
Eigen::Matrix4d hessian(const Beta& beta, double gamma, std::span<const ChoiceRecord> records);

struct GlmOptions {
    double gamma = 0.01;
    int max_iterations = 500;
    double gradient_tolerance = 1e-8;
    std::size_t min_records = 50;
    double separation_bound = 50.0;
};

struct GlmFit {
    GlmCoefficients coefficients;
    double gamma = 0.01;
    double log_likelihood = 0.0;
    double null_log_likelihood = 0.0;  // bSide-only model
    double pseudo_r2 = 0.0;            // McFadden
    double pseudo_r2_adjusted = 0.0;   // McFadden, penalized by the free parameter count
    double chi_square_lr = 0.0;
    int chi_square_dof = 0;
    double chi_square_p = 1.0;
    std::size_t n_trials = 0;
    int iterations = 0;
    bool converged = false;
    bool separation_warning = false;
    std::array<bool, 3> identifiable{true, true, true};  // num, size, spacing
};

/// Regressors with fewer than two distinct values are held at zero and
/// reported unidentifiable. Non-convergence is reported, not thrown.
GlmFit fit_glm(std::span<const ChoiceRecord> records, const GlmOptions& options = {});

/// Refits at each gamma in `grid` and keeps the smallest deviance.
GlmFit fit_glm_gamma_search(std::span<const ChoiceRecord> records, std::span<const double> grid,
                            GlmOptions options = {});
/// {0, 0.005, ..., 0.05}
std::vector<double> default_gamma_grid();

/// w = 1 / (sqrt(2) bNum); bNum must be positive.
double weber_fraction(double beta_num);
inline double weber_fraction(const GlmFit& fit) { return weber_fraction(fit.coefficients.beta_num); }

enum class Protocol { Human, Model };

struct IngestOptions {
    double presentation_ms = 250.0;
    double sd_multiplier = 2.0;
};

struct IngestResult {
    std::vector<ChoiceRecord> records;
    std::size_t rows = 0;
    std::size_t dropped_presentation = 0;  // rt below the presentation time
    std::size_t dropped_slow = 0;          // rt above mean + k sd of its ratio bin
};

/// Reads `trial_id,r_num,r_size,r_spacing,choice,rt_ms` or the choice schema
/// `pair_id,r_num,r_size,r_spacing,choice,correct`. The human protocol needs
/// rt_ms and applies both outlier rules; bins are the human ratio brackets.
IngestResult ingest_trials(const std::filesystem::path& path, Protocol protocol, const IngestOptions& options = {});

/// Applies the two human outlier rules in place of ingesting a file.
IngestResult filter_human_trials(std::vector<ChoiceRecord> records, const IngestOptions& options = {});

struct NamedFit {
    std::string id;
    GlmFit fit;
};

void write_fits_csv(const std::filesystem::path& path, std::span<const NamedFit> fits);
/// Reads the coefficient, gamma and fit-statistic columns back.
std::vector<NamedFit> read_fits_csv(const std::filesystem::path& path);

}  // namespace numsense::psychofit
