#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "numsense/datasets.hpp"
#include "numsense/dbn.hpp"
#include "numsense/stimspace.hpp"

namespace numsense {

struct DbnSection {
    std::vector<int> hidden_sizes{1500, 1000};
    dbn::TrainHyper hyper;  // seed is ignored; per-network seeds are derived
    double init_stddev = 0.01;
    int networks = 12;
};

struct TaskSection {
    std::optional<double> ridge;  // nullopt: trace-scaled default
    bool swap_augmentation = true;
};

struct AnalysisSection {
    double gamma = 0.01;
    bool gamma_search = false;
    double fdr_q = 0.01;
    std::vector<stimspace::Feature> features{stimspace::kAllFeatures.begin(), stimspace::kAllFeatures.end()};
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t master_seed = 0;
    render::DatasetConfig dataset;  // pair counts live under "task" in the file
    DbnSection dbn;
    TaskSection task;
    AnalysisSection analysis;
    std::filesystem::path artifacts = "artifacts";

    /// Checks ranges across sections; throws ConfigError naming the field path.
    void validate() const;
};

/// Unknown keys and wrongly typed values are rejected with their field path,
/// e.g. "dbn.hidden_sizes[1]: must be a positive integer".
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Round-trips through parse_config.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Sections used for stage fingerprints.
nlohmann::json dataset_section(const ExperimentConfig& cfg);
nlohmann::json dbn_section(const ExperimentConfig& cfg);
nlohmann::json task_section(const ExperimentConfig& cfg);
nlohmann::json analysis_section(const ExperimentConfig& cfg);

}  // namespace numsense
