#pragma once

// Simulated observers on the comparison-grid pair distribution, shared by the
// unit and acceptance tests.

#include <random>
#include <vector>

#include "numsense/choice.hpp"
#include "numsense/datasets.hpp"
#include "numsense/psychofit.hpp"

namespace numsense::testing {

inline std::vector<render::ImagePair> grid_pairs(int count, std::uint64_t seed) {
    render::DatasetConfig cfg;
    cfg.instances = 1;
    const auto m = render::plan_comparison_set(cfg);
    return render::sample_model_pairs(m, count, 0, seed).train;
}

/// Choices drawn from the lapse-probit model with the given coefficients.
inline std::vector<ChoiceRecord> simulate_observer(const std::vector<render::ImagePair>& pairs,
                                                   const psychofit::GlmCoefficients& c, double gamma,
                                                   std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<ChoiceRecord> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        const double pr = psychofit::predict_choice_prob(c, gamma, p.r_num, p.r_size, p.r_spacing);
        const Side choice = unit(rng) < pr ? Side::Right : Side::Left;
        out.push_back({p.pair_id, p.r_num, p.r_size, p.r_spacing, choice, choice == p.correct_side, {}});
    }
    return out;
}

}  // namespace numsense::testing
