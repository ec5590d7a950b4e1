#include "numsense/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "numsense/checkpoint.hpp"
#include "numsense/datasets.hpp"
#include "numsense/errors.hpp"
#include "numsense/geometry.hpp"
#include "numsense/image_io.hpp"
#include "numsense/parallel.hpp"
#include "numsense/psychofit.hpp"
#include "numsense/readout.hpp"
#include "numsense/report.hpp"
#include "numsense/rsa.hpp"
#include "numsense/seeds.hpp"

namespace numsense::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::GenStimuli: return "gen-stimuli";
        case Stage::Train: return "train";
        case Stage::Task: return "task";
        case Stage::FitGlm: return "fit-glm";
        case Stage::Geometry: return "geometry";
        case Stage::Rsa: return "rsa";
        case Stage::Report: return "report";
    }
    return "?";
}

std::vector<Stage> parse_stages(const std::string& list) {
    if (list == "all") return {std::begin(kAllStages), std::end(kAllStages)};
    std::set<int> chosen;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto it = std::find_if(std::begin(kAllStages), std::end(kAllStages),
                                     [&](Stage s) { return item == stage_name(s); });
        if (it == std::end(kAllStages)) throw ConfigError("--stages: unknown stage '" + item + "'");
        chosen.insert(static_cast<int>(*it));
    }
    if (chosen.empty()) throw ConfigError("--stages: no stage selected");
    std::vector<Stage> out;
    for (int s : chosen) out.push_back(static_cast<Stage>(s));
    return out;
}

std::string network_id(int net) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "net%02d", net);
    return buf;
}

std::string run_id(int net, const std::string& tag) { return network_id(net) + "_" + tag; }

fs::path Layout::checkpoint(int net, const std::string& tag) const {
    return checkpoints() / network_id(net) / (tag + ".nslb");
}
fs::path Layout::train_log(int net) const { return checkpoints() / network_id(net) / "train_log.csv"; }
fs::path Layout::readout(int net, const std::string& tag) const { return task() / (run_id(net, tag) + "_readout.nslb"); }
fs::path Layout::choices(int net, const std::string& tag) const {
    return task() / "choices" / (run_id(net, tag) + ".csv");
}
fs::path Layout::rdm(int net, const std::string& tag) const { return rsa() / ("rdm_" + run_id(net, tag) + ".csv"); }
fs::path Layout::rsa_report(const std::string& tag) const { return rsa() / ("report_" + tag + ".json"); }

namespace {

std::vector<Stage> prerequisites(Stage s) {
    switch (s) {
        case Stage::GenStimuli: return {};
        case Stage::Train: return {Stage::GenStimuli};
        case Stage::Task: return {Stage::Train};
        case Stage::FitGlm: return {Stage::Task};
        case Stage::Geometry: return {Stage::FitGlm};
        case Stage::Rsa: return {Stage::Train};
        case Stage::Report: return {Stage::Task, Stage::FitGlm, Stage::Geometry, Stage::Rsa};
    }
    return {};
}

std::string hex(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

render::DatasetConfig dataset_config(const ExperimentConfig& cfg) {
    render::DatasetConfig d = cfg.dataset;
    d.master_seed = derive_seed(cfg.master_seed, "datasets");
    return d;
}

std::uint64_t network_seed(const ExperimentConfig& cfg, int net) {
    return derive_seed(cfg.master_seed, "dbn", static_cast<std::uint64_t>(net));
}

void say(const RunOptions& o, const std::string& line) {
    if (o.log) *o.log << line << std::endl;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& ex) {
        throw SchemaError(path.string() + ": " + ex.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// Runs one stage and returns the files it produced, relative to the root.
class StageRunner {
public:
    StageRunner(const ExperimentConfig& cfg, const Layout& layout, const RunOptions& options)
        : cfg_(cfg), layout_(layout), options_(options) {}

    std::vector<fs::path> run(Stage s) {
        switch (s) {
            case Stage::GenStimuli: return gen_stimuli();
            case Stage::Train: return train();
            case Stage::Task: return task();
            case Stage::FitGlm: return fit_glm();
            case Stage::Geometry: return geometry();
            case Stage::Rsa: return rsa();
            case Stage::Report: return report();
        }
        return {};
    }

private:
    int networks() const { return cfg_.dbn.networks; }

    std::vector<fs::path> gen_stimuli() {
        const auto summary = render::build_datasets(dataset_config(cfg_), layout_.datasets());
        say(options_, "  rendered " + std::to_string(summary.comparison_images) + " comparison, " +
                          std::to_string(summary.unsupervised_images) + " unsupervised, " +
                          std::to_string(summary.rsa_images) + " RSA images");
        return {layout_.comparison() / "manifest.json", layout_.unsupervised() / "manifest.json",
                layout_.rsa_set() / "manifest.json",    layout_.pairs() / "train.csv",
                layout_.pairs() / "test.csv",           layout_.pairs() / "human.csv"};
    }

    std::vector<fs::path> train() {
        const Eigen::MatrixXd images = load_image_matrix(layout_.unsupervised());
        std::vector<fs::path> outputs;
        for (int net = 1; net <= networks(); ++net) {
            for (const auto& tag : checkpoint_tags()) outputs.push_back(layout_.checkpoint(net, tag));
            outputs.push_back(layout_.train_log(net));
        }
        parallel_for(static_cast<std::size_t>(networks()), [&](std::size_t k) {
            const int net = static_cast<int>(k) + 1;
            dbn::DbnConfig dc;
            dc.hidden_sizes = cfg_.dbn.hidden_sizes;
            dc.hyper = cfg_.dbn.hyper;
            dc.hyper.seed = network_seed(cfg_, net);
            dc.init_stddev = cfg_.dbn.init_stddev;
            const dbn::TrainResult result = dbn::train_dbn(images, dc);
            fs::create_directories(layout_.checkpoint(net, "young").parent_path());
            const json meta = {{"network", net}, {"seed", dc.hyper.seed}, {"dbn", dbn_section(cfg_)}};
            dbn::save_dbn(layout_.checkpoint(net, "young"), result.young, meta);
            dbn::save_dbn(layout_.checkpoint(net, "mature"), result.mature, meta);
            std::ofstream log(layout_.train_log(net));
            log << "epoch,layer,recon_error,seconds\n";
            for (const auto& e : result.log) log << e.epoch << ',' << e.layer << ',' << e.recon_error << ',' << e.seconds << '\n';
        });
        say(options_, "  trained " + std::to_string(networks()) + " networks");
        return outputs;
    }

    std::vector<fs::path> task() {
        const auto manifest = render::read_manifest(layout_.comparison() / "manifest.json");
        const Eigen::MatrixXd images = load_image_matrix(layout_.comparison());
        const auto train_pairs = render::read_pairs_csv(layout_.pairs() / "train.csv", manifest);
        const auto test_pairs = render::read_pairs_csv(layout_.pairs() / "test.csv", manifest);
        fs::create_directories(layout_.task() / "choices");
        const readout::ReadoutOptions ro{cfg_.task.ridge, cfg_.task.swap_augmentation};

        std::vector<std::pair<int, std::string>> runs;
        for (int net = 1; net <= networks(); ++net) {
            for (const auto& tag : checkpoint_tags()) runs.emplace_back(net, tag);
        }
        std::vector<readout::TaskSummary> summaries(runs.size());
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const auto& [net, tag] = runs[k];
            const dbn::Dbn net_model = dbn::load_dbn(layout_.checkpoint(net, tag));
            const Eigen::MatrixXd reps = dbn::represent(net_model, images);
            readout::ReadoutModel model = readout::fit_readout(reps, train_pairs, ro);
            model.trained_on = run_id(net, tag);
            readout::save_readout(layout_.readout(net, tag), model);
            const auto result = readout::run_comparison_task(
                reps, model, test_pairs, derive_seed(cfg_.master_seed, "task", static_cast<std::uint64_t>(net)));
            readout::write_choices_csv(layout_.choices(net, tag), result.records);
            summaries[k] = result.summary;
        }

        json doc = json::object();
        std::vector<fs::path> outputs{layout_.task_summary()};
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const auto& [net, tag] = runs[k];
            const auto& s = summaries[k];
            json bins = json::array();
            for (const auto& b : s.by_ratio) {
                bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"n", b.n}, {"accuracy", b.accuracy}});
            }
            doc[run_id(net, tag)] = {{"n", s.n},
                                     {"empty", s.empty},
                                     {"accuracy", s.accuracy},
                                     {"by_ratio", bins},
                                     {"congruent_n", s.congruent_n},
                                     {"congruent_accuracy", s.congruent_accuracy},
                                     {"incongruent_n", s.incongruent_n},
                                     {"incongruent_accuracy", s.incongruent_accuracy}};
            outputs.push_back(layout_.readout(net, tag));
            outputs.push_back(layout_.choices(net, tag));
        }
        write_json(layout_.task_summary(), doc);
        say(options_, "  decided " + std::to_string(test_pairs.size()) + " test pairs for " +
                          std::to_string(runs.size()) + " checkpoints");
        return outputs;
    }

    std::vector<fs::path> fit_glm() {
        std::vector<psychofit::NamedFit> fits;
        psychofit::GlmOptions opt;
        opt.gamma = cfg_.analysis.gamma;
        const auto grid = psychofit::default_gamma_grid();
        for (int net = 1; net <= networks(); ++net) {
            for (const auto& tag : checkpoint_tags()) {
                const auto data = psychofit::ingest_trials(layout_.choices(net, tag), psychofit::Protocol::Model);
                psychofit::GlmFit fit = cfg_.analysis.gamma_search
                                            ? psychofit::fit_glm_gamma_search(data.records, grid, opt)
                                            : psychofit::fit_glm(data.records, opt);
                if (!fit.converged) say(options_, "  warning: GLM for " + run_id(net, tag) + " did not converge");
                if (fit.separation_warning) say(options_, "  warning: GLM for " + run_id(net, tag) + " shows separation");
                fits.push_back({run_id(net, tag), fit});
            }
        }
        fs::create_directories(layout_.fits().parent_path());
        psychofit::write_fits_csv(layout_.fits(), fits);
        return {layout_.fits()};
    }

    std::vector<fs::path> geometry() {
        const auto fits = psychofit::read_fits_csv(layout_.fits());
        std::vector<geometry::FeatureGeometry> rows;
        for (const auto& nf : fits) {
            const auto& c = nf.fit.coefficients;
            const geometry::DiscriminationVector v{{c.beta_num, c.beta_size, c.beta_spacing}};
            const auto part = geometry::analyze(nf.id, v, cfg_.analysis.features);
            rows.insert(rows.end(), part.begin(), part.end());
        }
        fs::create_directories(layout_.geometry().parent_path());
        geometry::write_geometry_csv(layout_.geometry(), rows);
        return {layout_.geometry()};
    }

    std::vector<fs::path> rsa() {
        const auto manifest = render::read_manifest(layout_.rsa_set() / "manifest.json");
        const Eigen::MatrixXd images = load_image_matrix(layout_.rsa_set());
        const auto& spec = cfg_.dataset.rsa;
        const std::size_t conditions = spec.n_levels.size() * spec.size_levels.size() * spec.spacing_levels.size();
        fs::create_directories(layout_.rsa());
        std::vector<fs::path> outputs;
        for (const auto& tag : checkpoint_tags()) {
            std::vector<rsa::Rdm> rdms;
            for (int net = 1; net <= networks(); ++net) {
                const dbn::Dbn model = dbn::load_dbn(layout_.checkpoint(net, tag));
                rdms.push_back(rsa::compute_model_rdm(model, manifest, images, conditions));
                rsa::write_rdm_csv(layout_.rdm(net, tag), rdms.back());
                outputs.push_back(layout_.rdm(net, tag));
            }
            std::map<std::string, stimspace::StimulusParams> by_label;
            for (const auto& e : manifest.images) by_label.emplace(e.condition, e.params);
            std::vector<stimspace::StimulusParams> params;
            for (const auto& label : rdms.front().labels) params.push_back(by_label.at(label));
            const auto candidates = rsa::default_candidates(rdms.front().labels, params);
            const auto rep = rsa::relatedness_and_ceiling(rdms, candidates, cfg_.analysis.fdr_q);
            json doc = rsa::report_to_json(rep);
            doc["tag"] = tag;
            doc["instances"] = rdms.size();
            write_json(layout_.rsa_report(tag), doc);
            outputs.push_back(layout_.rsa_report(tag));
        }
        return outputs;
    }

    std::vector<fs::path> report() {
        report::emit_report(layout_, cfg_);
        std::vector<fs::path> outputs;
        for (const auto& name : report::report_tables()) outputs.push_back(layout_.report() / name);
        outputs.push_back(layout_.report() / "summary.txt");
        return outputs;
    }

    const ExperimentConfig& cfg_;
    const Layout& layout_;
    const RunOptions& options_;
};

json load_stage_manifest(const Layout& layout) {
    if (!fs::exists(layout.manifest())) return {{"stages", json::object()}};
    json j = read_json(layout.manifest());
    if (!j.contains("stages") || !j["stages"].is_object()) throw SchemaError(layout.manifest().string() + ": no stages");
    return j;
}

bool is_current(const json& manifest, const Layout& layout, const ExperimentConfig& cfg, Stage s) {
    const auto& stages = manifest["stages"];
    const auto it = stages.find(stage_name(s));
    if (it == stages.end()) return false;
    if (it->value("fingerprint", "") != stage_fingerprint(cfg, s)) return false;
    for (const auto& out : it->value("outputs", json::array())) {
        if (!fs::exists(layout.root / out.get<std::string>())) return false;
    }
    return true;
}

}  // namespace

std::string stage_fingerprint(const ExperimentConfig& cfg, Stage s) {
    auto mix = [](const std::string& parent, const json& section) {
        return hex(fnv1a(parent + "|" + section.dump()));
    };
    const std::string seed = std::to_string(cfg.master_seed);
    switch (s) {
        case Stage::GenStimuli: return mix(seed, dataset_section(cfg));
        case Stage::Train: return mix(stage_fingerprint(cfg, Stage::GenStimuli), dbn_section(cfg));
        case Stage::Task: return mix(stage_fingerprint(cfg, Stage::Train), task_section(cfg));
        case Stage::FitGlm: return mix(stage_fingerprint(cfg, Stage::Task), analysis_section(cfg));
        case Stage::Geometry: return mix(stage_fingerprint(cfg, Stage::FitGlm), analysis_section(cfg));
        case Stage::Rsa: return mix(stage_fingerprint(cfg, Stage::Train), analysis_section(cfg));
        case Stage::Report:
            return mix(stage_fingerprint(cfg, Stage::Geometry) + stage_fingerprint(cfg, Stage::Rsa),
                       analysis_section(cfg));
    }
    return {};
}

Eigen::MatrixXd load_image_matrix(const fs::path& dir) {
    const auto manifest = render::read_manifest(dir / "manifest.json");
    const auto visible = static_cast<Eigen::Index>(manifest.width) * manifest.height;
    Eigen::MatrixXd images(visible, static_cast<Eigen::Index>(manifest.images.size()));
    parallel_for(manifest.images.size(), [&](std::size_t k) {
        const auto img = render::read_pgm(dir / manifest.images[k].file);
        if (img.width != manifest.width || img.height != manifest.height) {
            throw SchemaError((dir / manifest.images[k].file).string() + ": image size differs from the manifest");
        }
        for (Eigen::Index i = 0; i < visible; ++i) {
            images(i, static_cast<Eigen::Index>(k)) = img.pixels[static_cast<std::size_t>(i)];
        }
    });
    return images;
}

std::vector<StageOutcome> run_pipeline(const ExperimentConfig& cfg, const std::vector<Stage>& stages,
                                       const RunOptions& options) {
    cfg.validate();
    const Layout layout{cfg.artifacts};
    json manifest = load_stage_manifest(layout);
    const std::set<Stage> selected(stages.begin(), stages.end());

    for (Stage s : selected) {
        for (Stage dep : prerequisites(s)) {
            if (!selected.count(dep) && !is_current(manifest, layout, cfg, dep)) {
                throw DependencyError(stage_name(s), stage_name(dep));
            }
        }
    }

    fs::create_directories(layout.root);
    write_json(layout.config(), to_json(cfg));
    std::vector<StageOutcome> outcomes;
    StageRunner runner(cfg, layout, options);
    for (Stage s : selected) {
        if (!options.force && is_current(manifest, layout, cfg, s)) {
            say(options, std::string(stage_name(s)) + ": up-to-date");
            outcomes.push_back({s, false});
            continue;
        }
        say(options, std::string(stage_name(s)) + ": running");
        const auto outputs = runner.run(s);
        json rel = json::array();
        for (const auto& p : outputs) rel.push_back(fs::relative(p, layout.root).generic_string());
        manifest["stages"][stage_name(s)] = {{"fingerprint", stage_fingerprint(cfg, s)}, {"outputs", rel}};
        write_json(layout.manifest(), manifest);
        outcomes.push_back({s, true});
    }
    return outcomes;
}

}  // namespace numsense::pipeline
