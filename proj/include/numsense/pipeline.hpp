#pragma once

// Stage orchestration over one artifact directory:
//   gen-stimuli -> train -> task -> fit-glm -> geometry -> rsa -> report
// Each stage records a fingerprint of the configuration it ran with in
// MANIFEST.json and is skipped while that fingerprint and its outputs are
// current.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "numsense/config.hpp"

namespace numsense::pipeline {

enum class Stage { GenStimuli, Train, Task, FitGlm, Geometry, Rsa, Report };

inline constexpr Stage kAllStages[] = {Stage::GenStimuli, Stage::Train,    Stage::Task,  Stage::FitGlm,
                                       Stage::Geometry,   Stage::Rsa,      Stage::Report};

const char* stage_name(Stage s);
/// "all" or a comma-separated list of stage names; returned in pipeline order.
std::vector<Stage> parse_stages(const std::string& list);

/// Where every artifact lives under the root directory.
struct Layout {
    std::filesystem::path root;

    std::filesystem::path manifest() const { return root / "MANIFEST.json"; }
    std::filesystem::path config() const { return root / "config.json"; }
    std::filesystem::path datasets() const { return root / "datasets"; }
    std::filesystem::path comparison() const { return datasets() / "comparison"; }
    std::filesystem::path unsupervised() const { return datasets() / "unsupervised"; }
    std::filesystem::path rsa_set() const { return datasets() / "rsa"; }
    std::filesystem::path pairs() const { return datasets() / "pairs"; }
    std::filesystem::path checkpoints() const { return root / "checkpoints"; }
    std::filesystem::path checkpoint(int net, const std::string& tag) const;
    std::filesystem::path train_log(int net) const;
    std::filesystem::path task() const { return root / "task"; }
    std::filesystem::path readout(int net, const std::string& tag) const;
    std::filesystem::path choices(int net, const std::string& tag) const;
    std::filesystem::path task_summary() const { return task() / "summary.json"; }
    std::filesystem::path fits() const { return root / "fits" / "glm_fits.csv"; }
    std::filesystem::path geometry() const { return root / "geometry" / "geometry.csv"; }
    std::filesystem::path rsa() const { return root / "rsa"; }
    std::filesystem::path rdm(int net, const std::string& tag) const;
    std::filesystem::path rsa_report(const std::string& tag) const;
    std::filesystem::path report() const { return root / "report"; }
};

/// "net01" style identifier, 1-based.
std::string network_id(int net);
/// "net01_young"
std::string run_id(int net, const std::string& tag);

inline const std::vector<std::string>& checkpoint_tags() {
    static const std::vector<std::string> tags{"young", "mature"};
    return tags;
}

struct RunOptions {
    bool force = false;
    std::ostream* log = nullptr;  // progress lines; null for silence
};

struct StageOutcome {
    Stage stage;
    bool ran = false;  // false: up-to-date
};

/// Runs the selected stages in pipeline order. A selected stage whose
/// prerequisite is neither selected nor current throws DependencyError.
std::vector<StageOutcome> run_pipeline(const ExperimentConfig& cfg, const std::vector<Stage>& stages,
                                       const RunOptions& options = {});

/// Fingerprint the stage would record for this configuration.
std::string stage_fingerprint(const ExperimentConfig& cfg, Stage s);

/// Reads every PGM of a dataset directory into a visible x N binary matrix.
Eigen::MatrixXd load_image_matrix(const std::filesystem::path& dir);

}  // namespace numsense::pipeline
