#include "numsense/config.hpp"

#include <fstream>
#include <set>

#include "numsense/errors.hpp"

namespace numsense {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering the field path for error messages and
// rejecting keys that were never read.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "must be an object");
    }

    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, _] : j_.items()) {
            if (!seen_.count(key)) fail(field(key), "unknown key");
        }
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) fail(field(key), "must be a number");
            out = v->get<double>();
        }
    }

    void integer(const std::string& key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) fail(field(key), "must be an integer");
            out = v->get<int>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) fail(field(key), "must be true or false");
            out = v->get<bool>();
        }
    }

    void range(const std::string& key, stimspace::Range& out) {
        if (const json* v = find(key)) {
            if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
                fail(field(key), "must be a [lo, hi] pair of numbers");
            }
            out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
        }
    }

    template <typename T>
    void list(const std::string& key, std::vector<T>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) fail(field(key), "must be an array");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                const json& e = (*v)[i];
                const bool ok = std::is_integral_v<T> ? e.is_number_integer() : e.is_number();
                if (!ok) fail(field(key) + "[" + std::to_string(i) + "]", "must be a number");
                out.push_back(e.get<T>());
            }
        }
    }

    [[noreturn]] static void fail(const std::string& field, const std::string& what) {
        throw ConfigError(field + ": " + what);
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) Section::fail(field, what);
}

void check_range(const stimspace::Range& r, const std::string& field) {
    require(r.lo > 0.0 && r.hi >= r.lo, field, "needs 0 < lo <= hi");
}

json range_json(const stimspace::Range& r) { return json::array({r.lo, r.hi}); }

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig cfg;
    render::DatasetConfig& d = cfg.dataset;
    {
        Section root(doc, "");
        if (const json* v = root.find("name")) {
            if (!v->is_string()) Section::fail("name", "must be a string");
            cfg.name = v->get<std::string>();
        }
        if (const json* v = root.find("seed")) {
            if (!v->is_number_unsigned()) Section::fail("seed", "must be a non-negative integer");
            cfg.master_seed = v->get<std::uint64_t>();
        }
        if (const json* v = root.find("artifacts")) {
            if (!v->is_string()) Section::fail("artifacts", "must be a string");
            cfg.artifacts = v->get<std::string>();
        }
        if (const json* v = root.find("dataset")) {
            Section s(*v, "dataset");
            s.integer("reference_canvas", d.reference_canvas);
            s.integer("canvas", d.canvas);
            s.number("min_gap_px", d.min_gap_px);
            s.integer("max_retries", d.max_retries);
            s.integer("instances", d.instances);
            if (const json* g = s.find("grid")) {
                Section gs(*g, "dataset.grid");
                gs.range("n_range", d.grid.n_range);
                gs.range("size_range", d.grid.size_range);
                gs.range("spacing_range", d.grid.spacing_range);
                std::vector<int> levels(d.grid.levels.begin(), d.grid.levels.end());
                gs.list("levels", levels);
                require(levels.size() == 3, "dataset.grid.levels", "needs three entries (n, size, spacing)");
                std::copy(levels.begin(), levels.end(), d.grid.levels.begin());
            }
            if (const json* u = s.find("unsupervised")) {
                Section us(*u, "dataset.unsupervised");
                us.integer("count", d.unsupervised.count);
                us.range("n_range", d.unsupervised.n_range);
                us.range("size_range", d.unsupervised.size_range);
                us.range("spacing_range", d.unsupervised.spacing_range);
            }
            if (const json* r = s.find("rsa")) {
                Section rs(*r, "dataset.rsa");
                rs.list("n_levels", d.rsa.n_levels);
                rs.list("size_levels", d.rsa.size_levels);
                rs.list("spacing_levels", d.rsa.spacing_levels);
                rs.integer("instances", d.rsa.instances);
            }
        }
        if (const json* v = root.find("dbn")) {
            Section s(*v, "dbn");
            s.list("hidden_sizes", cfg.dbn.hidden_sizes);
            s.number("learning_rate", cfg.dbn.hyper.learning_rate);
            s.number("weight_decay", cfg.dbn.hyper.weight_decay);
            s.number("momentum", cfg.dbn.hyper.momentum);
            s.integer("batch_size", cfg.dbn.hyper.batch_size);
            s.integer("epochs", cfg.dbn.hyper.epochs);
            s.number("init_stddev", cfg.dbn.init_stddev);
            s.integer("networks", cfg.dbn.networks);
        }
        if (const json* v = root.find("task")) {
            Section s(*v, "task");
            s.integer("train_pairs", d.train_pairs);
            s.integer("test_pairs", d.test_pairs);
            s.integer("human_pairs", d.human_pairs);
            if (const json* r = s.find("ridge")) {
                if (r->is_null()) {
                    cfg.task.ridge.reset();
                } else if (r->is_number()) {
                    cfg.task.ridge = r->get<double>();
                } else {
                    Section::fail("task.ridge", "must be a number or null");
                }
            }
            s.boolean("swap_augmentation", cfg.task.swap_augmentation);
        }
        if (const json* v = root.find("analysis")) {
            Section s(*v, "analysis");
            s.number("gamma", cfg.analysis.gamma);
            s.boolean("gamma_search", cfg.analysis.gamma_search);
            s.number("fdr_q", cfg.analysis.fdr_q);
            if (const json* f = s.find("features")) {
                if (!f->is_array()) Section::fail("analysis.features", "must be an array of feature names");
                cfg.analysis.features.clear();
                for (std::size_t i = 0; i < f->size(); ++i) {
                    const std::string field = "analysis.features[" + std::to_string(i) + "]";
                    if (!(*f)[i].is_string()) Section::fail(field, "must be a feature name");
                    const auto feat = stimspace::parse_feature((*f)[i].get<std::string>());
                    if (!feat) Section::fail(field, "unknown feature '" + (*f)[i].get<std::string>() + "'");
                    cfg.analysis.features.push_back(*feat);
                }
            }
        }
    }
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    const render::DatasetConfig& d = dataset;
    require(d.reference_canvas > 0, "dataset.reference_canvas", "must be positive");
    require(d.canvas > 0, "dataset.canvas", "must be positive");
    require(d.min_gap_px >= 0.0, "dataset.min_gap_px", "must be >= 0");
    require(d.max_retries > 0, "dataset.max_retries", "must be positive");
    require(d.instances > 0, "dataset.instances", "must be positive");
    check_range(d.grid.n_range, "dataset.grid.n_range");
    check_range(d.grid.size_range, "dataset.grid.size_range");
    check_range(d.grid.spacing_range, "dataset.grid.spacing_range");
    for (std::size_t k = 0; k < 3; ++k) {
        require(d.grid.levels[k] >= 2, "dataset.grid.levels[" + std::to_string(k) + "]", "must be >= 2");
    }
    require(d.unsupervised.count > 0, "dataset.unsupervised.count", "must be positive");
    check_range(d.unsupervised.n_range, "dataset.unsupervised.n_range");
    check_range(d.unsupervised.size_range, "dataset.unsupervised.size_range");
    check_range(d.unsupervised.spacing_range, "dataset.unsupervised.spacing_range");
    require(!d.rsa.n_levels.empty(), "dataset.rsa.n_levels", "must not be empty");
    require(!d.rsa.size_levels.empty(), "dataset.rsa.size_levels", "must not be empty");
    require(!d.rsa.spacing_levels.empty(), "dataset.rsa.spacing_levels", "must not be empty");
    require(d.rsa.instances > 0, "dataset.rsa.instances", "must be positive");
    require(d.train_pairs > 0, "task.train_pairs", "must be positive");
    require(d.test_pairs >= 0, "task.test_pairs", "must be >= 0");
    require(d.human_pairs >= 0, "task.human_pairs", "must be >= 0");
    require(!task.ridge || *task.ridge >= 0.0, "task.ridge", "must be >= 0");
    require(!dbn.hidden_sizes.empty(), "dbn.hidden_sizes", "must not be empty");
    for (std::size_t k = 0; k < dbn.hidden_sizes.size(); ++k) {
        require(dbn.hidden_sizes[k] > 0, "dbn.hidden_sizes[" + std::to_string(k) + "]", "must be a positive integer");
    }
    require(dbn.hyper.learning_rate > 0.0, "dbn.learning_rate", "must be positive");
    require(dbn.hyper.weight_decay >= 0.0, "dbn.weight_decay", "must be >= 0");
    require(dbn.hyper.momentum >= 0.0 && dbn.hyper.momentum < 1.0, "dbn.momentum", "must lie in [0, 1)");
    require(dbn.hyper.batch_size > 0, "dbn.batch_size", "must be positive");
    require(dbn.hyper.epochs > 0, "dbn.epochs", "must be positive");
    require(dbn.init_stddev > 0.0, "dbn.init_stddev", "must be positive");
    require(dbn.networks > 0, "dbn.networks", "must be positive");
    require(analysis.gamma >= 0.0 && analysis.gamma < 1.0, "analysis.gamma", "must lie in [0, 1)");
    require(analysis.fdr_q > 0.0 && analysis.fdr_q < 1.0, "analysis.fdr_q", "must lie in (0, 1)");
    require(!analysis.features.empty(), "analysis.features", "must not be empty");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& ex) {
        throw ConfigError(path.string() + ": " + ex.what());
    }
    return parse_config(doc);
}

json dataset_section(const ExperimentConfig& cfg) {
    const render::DatasetConfig& d = cfg.dataset;
    return {
        {"reference_canvas", d.reference_canvas},
        {"canvas", d.canvas},
        {"min_gap_px", d.min_gap_px},
        {"max_retries", d.max_retries},
        {"instances", d.instances},
        {"grid",
         {{"n_range", range_json(d.grid.n_range)},
          {"size_range", range_json(d.grid.size_range)},
          {"spacing_range", range_json(d.grid.spacing_range)},
          {"levels", d.grid.levels}}},
        {"unsupervised",
         {{"count", d.unsupervised.count},
          {"n_range", range_json(d.unsupervised.n_range)},
          {"size_range", range_json(d.unsupervised.size_range)},
          {"spacing_range", range_json(d.unsupervised.spacing_range)}}},
        {"rsa",
         {{"n_levels", d.rsa.n_levels},
          {"size_levels", d.rsa.size_levels},
          {"spacing_levels", d.rsa.spacing_levels},
          {"instances", d.rsa.instances}}},
    };
}

json dbn_section(const ExperimentConfig& cfg) {
    return {{"hidden_sizes", cfg.dbn.hidden_sizes},   {"learning_rate", cfg.dbn.hyper.learning_rate},
            {"weight_decay", cfg.dbn.hyper.weight_decay}, {"momentum", cfg.dbn.hyper.momentum},
            {"batch_size", cfg.dbn.hyper.batch_size},   {"epochs", cfg.dbn.hyper.epochs},
            {"init_stddev", cfg.dbn.init_stddev},       {"networks", cfg.dbn.networks}};
}

json task_section(const ExperimentConfig& cfg) {
    return {{"train_pairs", cfg.dataset.train_pairs},
            {"test_pairs", cfg.dataset.test_pairs},
            {"human_pairs", cfg.dataset.human_pairs},
            {"ridge", cfg.task.ridge ? json(*cfg.task.ridge) : json(nullptr)},
            {"swap_augmentation", cfg.task.swap_augmentation}};
}

json analysis_section(const ExperimentConfig& cfg) {
    json features = json::array();
    for (auto f : cfg.analysis.features) features.push_back(std::string(stimspace::feature_name(f)));
    return {{"gamma", cfg.analysis.gamma},
            {"gamma_search", cfg.analysis.gamma_search},
            {"fdr_q", cfg.analysis.fdr_q},
            {"features", features}};
}

json to_json(const ExperimentConfig& cfg) {
    return {{"name", cfg.name},
            {"seed", cfg.master_seed},
            {"artifacts", cfg.artifacts.string()},
            {"dataset", dataset_section(cfg)},
            {"dbn", dbn_section(cfg)},
            {"task", task_section(cfg)},
            {"analysis", analysis_section(cfg)}};
}

}  // namespace numsense
