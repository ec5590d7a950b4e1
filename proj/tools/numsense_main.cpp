#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "numsense/config.hpp"
#include "numsense/errors.hpp"
#include "numsense/pipeline.hpp"
#include "numsense/psychofit.hpp"
#include "numsense/report.hpp"

namespace {

struct Common {
    std::string config;
    std::string stages = "all";
    bool force = false;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_flag("--force", c.force, "Re-run stages even when up-to-date");
    cmd->add_option("--seed", c.seed, "Override the master seed");
    cmd->add_option("--out", c.out, "Override the artifact directory");
}

int run_stages(const Common& c, const std::vector<numsense::pipeline::Stage>& stages) {
    numsense::ExperimentConfig cfg = numsense::load_config(c.config);
    if (c.seed) cfg.master_seed = *c.seed;
    if (!c.out.empty()) cfg.artifacts = c.out;
    numsense::pipeline::RunOptions opt;
    opt.force = c.force;
    opt.log = &std::cout;
    numsense::pipeline::run_pipeline(cfg, stages, opt);
    if (std::find(stages.begin(), stages.end(), numsense::pipeline::Stage::Report) != stages.end()) {
        std::ifstream summary(numsense::pipeline::Layout{cfg.artifacts}.report() / "summary.txt");
        std::cout << '\n' << summary.rdbuf();
    }
    return 0;
}

int fit_file(const std::string& trials, const std::string& protocol, double gamma, bool search,
             const std::string& out) {
    using namespace numsense::psychofit;
    const Protocol p = protocol == "human" ? Protocol::Human : Protocol::Model;
    const IngestResult data = ingest_trials(trials, p);
    std::cout << "rows " << data.rows << ", dropped " << data.dropped_presentation << " (presentation time) + "
              << data.dropped_slow << " (slow)\n";
    GlmOptions opt;
    opt.gamma = gamma;
    const auto grid = default_gamma_grid();
    const GlmFit fit = search ? fit_glm_gamma_search(data.records, grid, opt) : fit_glm(data.records, opt);
    const NamedFit named{std::filesystem::path(trials).stem().string(), fit};
    if (!out.empty()) write_fits_csv(out, std::span(&named, 1));
    const auto& c = fit.coefficients;
    std::cout << "beta_side " << c.beta_side << "\nbeta_num " << c.beta_num << "\nbeta_size " << c.beta_size
              << "\nbeta_spacing " << c.beta_spacing << "\ngamma " << fit.gamma << "\nadjusted pseudo-R2 "
              << fit.pseudo_r2_adjusted << "\nLR chi2(" << fit.chi_square_dof << ") " << fit.chi_square_lr
              << ", p " << fit.chi_square_p << '\n';
    if (c.beta_num > 0.0) std::cout << "weber " << weber_fraction(c.beta_num) << '\n';
    if (!fit.converged) std::cout << "warning: did not converge\n";
    if (fit.separation_warning) std::cout << "warning: separation (|beta| > 50)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    using numsense::pipeline::Stage;
    CLI::App app{"numsense: dot-array stimuli, DBN training and numerosity analyses"};
    app.require_subcommand(1);

    Common common;
    struct Sub {
        const char* name;
        Stage stage;
        const char* help;
    };
    const Sub subs[] = {
        {"gen-stimuli", Stage::GenStimuli, "Render the stimulus sets and pair lists"},
        {"train", Stage::Train, "Train the Young and Mature networks"},
        {"task", Stage::Task, "Fit read-outs and run the comparison task"},
        {"fit-glm", Stage::FitGlm, "Fit the psychometric GLM to every choice file"},
        {"geometry", Stage::Geometry, "Project discrimination vectors onto feature axes"},
        {"rsa", Stage::Rsa, "Model RDMs and relatedness to categorical RDMs"},
        {"report", Stage::Report, "Assemble report tables and directional checks"},
    };
    std::map<CLI::App*, Stage> stage_of;
    std::string trials, protocol = "model", fit_out;
    double gamma = 0.01;
    bool gamma_search = false;
    for (const Sub& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.help);
        stage_of[cmd] = s.stage;
        if (s.stage == Stage::FitGlm) {
            // Standalone mode: fit one trial CSV without a pipeline.
            cmd->add_option("--config", common.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
            cmd->add_flag("--force", common.force, "Re-run stages even when up-to-date");
            cmd->add_option("--seed", common.seed, "Override the master seed");
            cmd->add_option("--out", common.out, "Artifact directory, or fit CSV with --trials");
            cmd->add_option("--trials", trials, "Fit this trial CSV instead of pipeline choices")
                ->check(CLI::ExistingFile);
            cmd->add_option("--protocol", protocol, "human or model")->check(CLI::IsMember({"human", "model"}));
            cmd->add_option("--gamma", gamma, "Guessing rate");
            cmd->add_flag("--gamma-search", gamma_search, "Pick gamma from {0, 0.005, ..., 0.05}");
        } else {
            add_common(cmd, common);
        }
    }
    CLI::App* run = app.add_subcommand("run", "Run several stages in order");
    add_common(run, common);
    run->add_option("--stages", common.stages, "all, or a comma-separated stage list");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_stages(common, numsense::pipeline::parse_stages(common.stages));
        for (const auto& [cmd, stage] : stage_of) {
            if (!cmd->parsed()) continue;
            if (stage == Stage::FitGlm && !trials.empty()) return fit_file(trials, protocol, gamma, gamma_search, common.out);
            if (common.config.empty()) throw numsense::ConfigError("--config is required");
            return run_stages(common, {stage});
        }
    } catch (const numsense::ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return 2;
    } catch (const numsense::DependencyError& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 3;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
