#pragma once

// Linear two-unit read-out over concatenated pair representations, fitted in
// closed form by the (ridge) pseudoinverse. Output unit 0 votes left, unit 1
// votes right.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "numsense/choice.hpp"
#include "numsense/datasets.hpp"
#include "numsense/errors.hpp"

namespace numsense::readout {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when ridge == 0 and X'X is rank-deficient.
class SingularSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct ReadoutModel {
    Matrix weights;  // 2 x (2H + 1); last column is the bias
    std::string trained_on;

    Eigen::Index representation_size() const { return (weights.cols() - 1) / 2; }
    Vector outputs(const Vector& left, const Vector& right) const;
};

struct LabeledPair {
    Vector left;
    Vector right;
    Side correct = Side::Left;
};

struct ReadoutOptions {
    /// nullopt selects 1e-6 * trace(X'X) / dim.
    std::optional<double> ridge;
    /// Also present every pair with its sides exchanged.
    bool swap_augmentation = true;
};

/// W = T'X (X'X + ridge I)^-1 for explicit design rows X and one-hot targets T.
Matrix solve_ridge(const Matrix& x, const Matrix& t, std::optional<double> ridge);

ReadoutModel fit_readout(std::span<const LabeledPair> pairs, const ReadoutOptions& options = {});

/// Same fit where the pair sides index columns of `reps` (H x images).
ReadoutModel fit_readout(const Matrix& reps, std::span<const render::ImagePair> pairs,
                         const ReadoutOptions& options = {});

/// Larger output wins; an exact tie is settled by one fair coin from `rng`.
Side decide(const ReadoutModel& model, const Vector& left, const Vector& right, std::mt19937_64& rng);

struct BinAccuracy {
    double lo = 0.0;  // smaller/larger numerosity ratio bracket
    double hi = 0.0;
    std::size_t n = 0;
    double accuracy = 0.0;
};

struct TaskSummary {
    std::size_t n = 0;
    bool empty = true;
    double accuracy = 0.0;
    std::vector<BinAccuracy> by_ratio;  // nonempty deciles only
    std::size_t congruent_n = 0;
    double congruent_accuracy = 0.0;
    std::size_t incongruent_n = 0;
    double incongruent_accuracy = 0.0;
};

struct TaskResult {
    std::vector<ChoiceRecord> records;
    TaskSummary summary;
};

/// Numerosity, Size and Spacing ratios all on the same side of 1.
bool is_congruent(double r_num, double r_size, double r_spacing);
/// Size and Spacing ratios both on the opposite side of 1 from Numerosity.
bool is_incongruent(double r_num, double r_size, double r_spacing);

/// Decides every pair; tie coins come from derive_seed(seed, "decide", pair_id).
TaskResult run_comparison_task(const Matrix& reps, const ReadoutModel& model,
                               std::span<const render::ImagePair> pairs, std::uint64_t seed);

TaskSummary summarize(std::span<const ChoiceRecord> records);

void write_choices_csv(const std::filesystem::path& path, std::span<const ChoiceRecord> records);

/// Stored in the layer container as one layer: weights 2 x 2H, visible bias
/// zero, hidden bias = bias column. Tag "readout".
void save_readout(const std::filesystem::path& path, const ReadoutModel& model);
ReadoutModel load_readout(const std::filesystem::path& path);

}  // namespace numsense::readout
