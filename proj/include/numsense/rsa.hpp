#pragma once

// Representational dissimilarity matrices over the 27-condition stimulus set
// and their comparison with categorical feature models.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "numsense/datasets.hpp"
#include "numsense/dbn.hpp"
#include "numsense/stimspace.hpp"

namespace numsense::rsa {

using Matrix = Eigen::MatrixXd;

struct Rdm {
    std::vector<std::string> labels;
    Matrix values;

    std::size_t size() const { return labels.size(); }
    /// Throws unless square, label-sized, symmetric to 1e-12 with zero diagonal.
    void validate() const;
};

/// Entries below the diagonal, row by row: (1,0), (2,0), (2,1), ...
std::vector<double> lower_triangle(const Rdm& rdm);

/// 1 - Pearson between columns of `patterns` (features x conditions).
Rdm rdm_from_patterns(std::vector<std::string> labels, const Matrix& patterns);

struct ConditionMeans {
    std::vector<std::string> labels;  // first-appearance order in the manifest
    std::vector<stimspace::StimulusParams> params;
    Matrix means;  // features x conditions
};

/// Averages the columns of `reps` (aligned with manifest entries) per condition.
ConditionMeans condition_means(const Matrix& reps, const render::DatasetManifest& manifest,
                               std::size_t expected_conditions = 27);

/// Deepest-layer representations of `images` (visible x N, aligned with the
/// manifest), averaged per condition, then 1 - Pearson.
Rdm compute_model_rdm(const dbn::Dbn& net, const render::DatasetManifest& manifest, const Matrix& images,
                      std::size_t expected_conditions = 27);

/// |log2 f_i - log2 f_j|.
Rdm compute_categorical_rdm(stimspace::Feature f, const std::vector<std::string>& labels,
                            std::span<const stimspace::StimulusParams> params);

/// Kendall tau-a over the lower triangles. Throws on label mismatch.
double compare_rdms(const Rdm& a, const Rdm& b);

/// Off-diagonal entries replaced by their midranks scaled into [0, 1].
Rdm rank_transform(const Rdm& rdm);

/// Entry-wise mean of RDMs with identical labels.
Rdm mean_rdm(std::span<const Rdm> rdms);

struct Candidate {
    std::string name;
    Rdm rdm;
};

/// Num, FA, ConvexHull (the FA model under its second name), TSA, ISA, Spar, TP, IP.
std::vector<Candidate> default_candidates(const std::vector<std::string>& labels,
                                          std::span<const stimspace::StimulusParams> params);

struct CandidateResult {
    std::string name;
    std::vector<double> taus;  // one per instance
    double mean_tau = 0.0;
    double median_tau = 0.0;
    double p_value = 1.0;  // one-sided signed rank, tau > 0
    bool significant = false;
};

struct PairwiseResult {
    std::string a;
    std::string b;
    double mean_difference = 0.0;  // a - b
    double p_value = 1.0;          // two-sided signed rank
    bool significant = false;
};

struct RelatednessReport {
    std::vector<CandidateResult> candidates;
    std::vector<PairwiseResult> pairwise;
    double ceiling_lower = 0.0;
    double ceiling_upper = 0.0;
    double fdr_q = 0.01;
};

/// Needs at least 6 instance RDMs. Both candidate p-values and pairwise
/// p-values are Benjamini-Hochberg corrected at q.
RelatednessReport relatedness_and_ceiling(std::span<const Rdm> instances, std::span<const Candidate> candidates,
                                          double fdr_q = 0.01);

/// 1-based rank of `name` by median tau across instances: 1 + the number of
/// distinct median values strictly above its own, so aliased candidates share
/// a rank.
int candidate_rank(const RelatednessReport& report, const std::string& name);

/// Header: empty cell then the labels; one row per label.
void write_rdm_csv(const std::filesystem::path& path, const Rdm& rdm);
Rdm read_rdm_csv(const std::filesystem::path& path);

nlohmann::json report_to_json(const RelatednessReport& report);

}  // namespace numsense::rsa
