#include "numsense/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "numsense/image_io.hpp"
#include "numsense/parallel.hpp"
#include "numsense/seeds.hpp"

namespace numsense::render {

namespace fs = std::filesystem;
using nlohmann::json;
using stimspace::StimulusParams;

std::size_t DatasetManifest::index_of(const std::string& file) const {
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].file == file) return i;
    }
    throw SchemaError("image '" + file + "' is not listed in manifest '" + name + "'");
}

namespace {

json features_json(const stimspace::FeatureVector& f) {
    return {{"tsa", f.tsa}, {"isa", f.isa}, {"fa", f.fa}, {"spar", f.spar},
            {"tp", f.tp},   {"ip", f.ip},   {"cov", f.cov}, {"ac", f.ac}};
}

std::string image_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%06zu.pgm", i);
    return buf;
}

std::string condition_label(int n, std::size_t size_level, std::size_t spacing_level) {
    return "n" + std::to_string(n) + "_s" + std::to_string(size_level) + "_p" + std::to_string(spacing_level);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_manifest(const fs::path& path, const DatasetManifest& m) {
    json images = json::array();
    for (const auto& e : m.images) {
        images.push_back({{"file", e.file},
                          {"n", e.params.n()},
                          {"size", e.params.size()},
                          {"spacing", e.params.spacing()},
                          {"features", features_json(e.features)},
                          {"instance", e.instance},
                          {"seed", e.seed},
                          {"condition", e.condition}});
    }
    const json doc = {{"schema_version", m.schema_version},
                      {"name", m.name},
                      {"width", m.width},
                      {"height", m.height},
                      {"reference_canvas", m.reference_canvas},
                      {"images", images}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(1) << '\n';
}

DatasetManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    DatasetManifest m;
    try {
        const json doc = json::parse(in);
        m.schema_version = doc.at("schema_version").get<int>();
        if (m.schema_version != kManifestSchemaVersion) {
            throw SchemaError(path.string() + ": unsupported schema_version " + std::to_string(m.schema_version));
        }
        m.name = doc.at("name").get<std::string>();
        m.width = doc.at("width").get<int>();
        m.height = doc.at("height").get<int>();
        m.reference_canvas = doc.at("reference_canvas").get<int>();
        for (const auto& e : doc.at("images")) {
            StimulusParams p(e.at("n").get<int>(), e.at("size").get<double>(), e.at("spacing").get<double>());
            m.images.push_back({e.at("file").get<std::string>(), p, stimspace::derive_features(p),
                                e.at("instance").get<int>(), e.at("seed").get<std::uint64_t>(),
                                e.at("condition").get<std::string>()});
        }
    } catch (const json::exception& ex) {
        throw SchemaError(path.string() + ": " + ex.what());
    }
    return m;
}

ImagePair make_pair(const DatasetManifest& m, int pair_id, std::size_t left, std::size_t right) {
    const StimulusParams& l = m.images.at(left).params;
    const StimulusParams& r = m.images.at(right).params;
    ImagePair p;
    p.pair_id = pair_id;
    p.left = left;
    p.right = right;
    p.r_num = static_cast<double>(r.n()) / l.n();
    p.r_size = r.size() / l.size();
    p.r_spacing = r.spacing() / l.spacing();
    p.correct_side = r.n() > l.n() ? Side::Right : Side::Left;
    return p;
}

PairSplit sample_model_pairs(const DatasetManifest& m, int train_count, int test_count, std::uint64_t seed) {
    const std::size_t total = static_cast<std::size_t>(train_count) + static_cast<std::size_t>(test_count);
    if (m.images.size() < 2 && total > 0) throw DomainError("need at least two images to form pairs");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, m.images.size() - 1);
    std::set<std::pair<std::size_t, std::size_t>> used;
    std::vector<ImagePair> all;
    all.reserve(total);
    std::size_t attempts = 0;
    const std::size_t max_attempts = 100 * total + 1000;
    while (all.size() < total) {
        if (++attempts > max_attempts) throw DomainError("dataset too small for the requested number of unique pairs");
        const std::size_t a = pick(rng);
        const std::size_t b = pick(rng);
        if (a == b || m.images[a].params.n() == m.images[b].params.n()) continue;
        if (!used.insert({std::min(a, b), std::max(a, b)}).second) continue;
        all.push_back(make_pair(m, static_cast<int>(all.size()), a, b));
    }
    PairSplit split;
    split.train.assign(all.begin(), all.begin() + train_count);
    split.test.assign(all.begin() + train_count, all.end());
    for (std::size_t i = 0; i < split.test.size(); ++i) split.test[i].pair_id = static_cast<int>(i);
    return split;
}

const std::vector<RatioBucket>& human_ratio_buckets() {
    static const std::vector<RatioBucket> buckets = {
        {0.5, 0.6, 0.1}, {0.6, 0.7, 0.2}, {0.7, 0.8, 0.3}, {0.8, 0.9, 0.4}};
    return buckets;
}

int ratio_bucket(double ratio) {
    const auto& b = human_ratio_buckets();
    for (std::size_t i = 0; i < b.size(); ++i) {
        const bool last = i + 1 == b.size();
        if (ratio >= b[i].lo && (ratio < b[i].hi || (last && ratio <= b[i].hi))) return static_cast<int>(i);
    }
    return -1;
}

std::vector<int> bucket_counts(int total) {
    const auto& b = human_ratio_buckets();
    std::vector<int> counts(b.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double exact = b[i].share * total;
        counts[i] = static_cast<int>(std::floor(exact + 1e-9));
        assigned += counts[i];
        remainders.push_back({exact - counts[i], i});
    }
    std::stable_sort(remainders.begin(), remainders.end(), [](auto a, auto c) { return a.first > c.first; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[remainders[k % remainders.size()].second];
    return counts;
}

std::vector<ImagePair> sample_human_pairs(const DatasetManifest& m, int count, std::uint64_t seed) {
    std::map<int, std::vector<std::size_t>> by_n;
    for (std::size_t i = 0; i < m.images.size(); ++i) by_n[m.images[i].params.n()].push_back(i);
    const auto& buckets = human_ratio_buckets();
    std::vector<std::vector<std::pair<int, int>>> n_pairs(buckets.size());
    for (const auto& [a, ia] : by_n) {
        for (const auto& [b, ib] : by_n) {
            if (a >= b) continue;
            const int k = ratio_bucket(static_cast<double>(a) / b);
            if (k >= 0) n_pairs[static_cast<std::size_t>(k)].push_back({a, b});
        }
    }
    const std::vector<int> counts = bucket_counts(count);
    std::mt19937_64 rng(seed);
    std::set<std::pair<std::size_t, std::size_t>> used;
    std::vector<ImagePair> out;
    for (std::size_t k = 0; k < buckets.size(); ++k) {
        if (counts[k] > 0 && n_pairs[k].empty()) {
            throw DomainError("no numerosity pair falls in ratio bucket [" + format_double(buckets[k].lo) + ", " +
                              format_double(buckets[k].hi) + "]");
        }
        std::size_t attempts = 0;
        for (int placed = 0; placed < counts[k];) {
            if (++attempts > 1000u * static_cast<std::size_t>(counts[k]) + 1000) {
                throw DomainError("cannot draw enough unique pairs for the human protocol");
            }
            const auto [na, nb] = n_pairs[k][std::uniform_int_distribution<std::size_t>(0, n_pairs[k].size() - 1)(rng)];
            const auto& ga = by_n[na];
            const auto& gb = by_n[nb];
            std::size_t a = ga[std::uniform_int_distribution<std::size_t>(0, ga.size() - 1)(rng)];
            std::size_t b = gb[std::uniform_int_distribution<std::size_t>(0, gb.size() - 1)(rng)];
            if (!used.insert({std::min(a, b), std::max(a, b)}).second) continue;
            if (std::bernoulli_distribution(0.5)(rng)) std::swap(a, b);
            out.push_back(make_pair(m, 0, a, b));
            ++placed;
        }
    }
    std::shuffle(out.begin(), out.end(), rng);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].pair_id = static_cast<int>(i);
    return out;
}

void write_pairs_csv(const fs::path& path, const std::vector<ImagePair>& pairs, const DatasetManifest& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "pair_id,left_image,right_image,r_num,r_size,r_spacing,correct_side\n";
    for (const auto& p : pairs) {
        out << p.pair_id << ',' << m.images.at(p.left).file << ',' << m.images.at(p.right).file << ','
            << format_double(p.r_num) << ',' << format_double(p.r_size) << ',' << format_double(p.r_spacing) << ','
            << side_name(p.correct_side) << '\n';
    }
}

std::vector<ImagePair> read_pairs_csv(const fs::path& path, const DatasetManifest& m) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "pair_id,left_image,right_image,r_num,r_size,r_spacing,correct_side") {
        throw SchemaError(path.string() + ": unexpected pair list header");
    }
    std::vector<ImagePair> pairs;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7) throw SchemaError(path.string() + ":" + std::to_string(row) + ": expected 7 columns");
        try {
            ImagePair p = make_pair(m, std::stoi(cells[0]), m.index_of(cells[1]), m.index_of(cells[2]));
            if (parse_side(cells[6]) != p.correct_side) {
                throw SchemaError(path.string() + ":" + std::to_string(row) + ": correct_side disagrees with manifest");
            }
            pairs.push_back(p);
        } catch (const std::logic_error&) {
            throw SchemaError(path.string() + ":" + std::to_string(row) + ": malformed row");
        }
    }
    return pairs;
}

DotImage render_entry(const DatasetManifest& m, const ManifestEntry& e, const DatasetConfig& cfg) {
    const double scale = m.length_scale();
    RenderOptions opt;
    opt.min_gap = cfg.min_gap_px * scale;
    opt.max_retries = cfg.max_retries;
    return render_image(e.params.scaled(scale), Canvas{m.width, m.height}, e.seed, opt);
}

namespace {

DatasetManifest empty_manifest(const DatasetConfig& cfg, std::string name) {
    if (cfg.canvas < 1 || cfg.reference_canvas < 1) throw DomainError("canvas sizes must be positive");
    DatasetManifest m;
    m.name = std::move(name);
    m.width = cfg.canvas;
    m.height = cfg.canvas;
    m.reference_canvas = cfg.reference_canvas;
    return m;
}

bool field_fits(const StimulusParams& p, int reference_canvas) {
    return std::sqrt(stimspace::derive_features(p).fa / std::numbers::pi) <= reference_canvas / 2.0;
}

}  // namespace

DatasetManifest plan_comparison_set(const DatasetConfig& cfg) {
    DatasetManifest m = empty_manifest(cfg, "comparison");
    if (cfg.instances < 1) throw DomainError("instances must be >= 1");
    const auto grid = stimspace::build_grid(cfg.grid);
    const auto sizes = stimspace::log_levels(cfg.grid.size_range, cfg.grid.levels[1]);
    const auto spacings = stimspace::log_levels(cfg.grid.spacing_range, cfg.grid.levels[2]);
    std::size_t cell = 0;
    for (const auto& p : grid) {
        if (!field_fits(p, cfg.reference_canvas)) {
            throw CanvasTooSmall("grid point n=" + std::to_string(p.n()) + " spacing=" + format_double(p.spacing()) +
                                 " does not fit the reference canvas");
        }
        const std::size_t si = (cell / spacings.size()) % sizes.size();
        const std::size_t pi = cell % spacings.size();
        const std::string label = condition_label(p.n(), si, pi);
        for (int k = 0; k < cfg.instances; ++k) {
            const std::size_t idx = m.images.size();
            m.images.push_back({image_name(idx), p, stimspace::derive_features(p), k,
                                derive_seed(cfg.master_seed, "comparison", idx), label});
        }
        ++cell;
    }
    return m;
}

DatasetManifest plan_rsa_set(const DatasetConfig& cfg) {
    DatasetManifest m = empty_manifest(cfg, "rsa");
    const auto& spec = cfg.rsa;
    if (spec.instances < 1) throw DomainError("rsa instances must be >= 1");
    for (int n : spec.n_levels) {
        for (std::size_t si = 0; si < spec.size_levels.size(); ++si) {
            for (std::size_t pi = 0; pi < spec.spacing_levels.size(); ++pi) {
                const StimulusParams p(n, spec.size_levels[si], spec.spacing_levels[pi]);
                if (!field_fits(p, cfg.reference_canvas)) throw CanvasTooSmall("rsa condition does not fit the canvas");
                for (int k = 0; k < spec.instances; ++k) {
                    const std::size_t idx = m.images.size();
                    m.images.push_back({image_name(idx), p, stimspace::derive_features(p), k,
                                        derive_seed(cfg.master_seed, "rsa", idx), condition_label(n, si, pi)});
                }
            }
        }
    }
    return m;
}

DatasetManifest plan_unsupervised_set(const DatasetConfig& cfg) {
    DatasetManifest m = empty_manifest(cfg, "unsupervised");
    const auto& spec = cfg.unsupervised;
    const int n_lo = static_cast<int>(std::lround(spec.n_range.lo));
    const int n_hi = static_cast<int>(std::lround(spec.n_range.hi));
    if (n_lo < 1 || n_hi < n_lo) throw DomainError("unsupervised numerosity range is invalid");
    if (spec.count < 0) throw DomainError("unsupervised count must be >= 0");
    const double lsz0 = std::log2(spec.size_range.lo), lsz1 = std::log2(spec.size_range.hi);
    const double lsp0 = std::log2(spec.spacing_range.lo), lsp1 = std::log2(spec.spacing_range.hi);
    m.images.resize(static_cast<std::size_t>(spec.count),
                    ManifestEntry{"", StimulusParams(1, 1.0, 1.0), {}, 0, 0, "free"});
    parallel_for(m.images.size(), [&](std::size_t i) {
        const int n = n_lo + static_cast<int>(i % static_cast<std::size_t>(n_hi - n_lo + 1));
        std::mt19937_64 rng(derive_seed(cfg.master_seed, "unsupervised-params", i));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt > 10000) throw PlacementError("cannot draw a renderable unsupervised stimulus for n=" + std::to_string(n));
            const double size = std::exp2(lsz0 + (lsz1 - lsz0) * unit(rng));
            const double spacing = std::exp2(lsp0 + (lsp1 - lsp0) * unit(rng));
            if (spacing < size) continue;
            const StimulusParams p(n, size, spacing);
            if (!field_fits(p, cfg.reference_canvas)) continue;
            ManifestEntry e{image_name(i), p, stimspace::derive_features(p), 0,
                            derive_seed(cfg.master_seed, "unsupervised", i * 10007 + attempt), "free"};
            try {
                (void)render_entry(m, e, cfg);
            } catch (const PlacementError&) {
                continue;
            }
            m.images[i] = std::move(e);
            return;
        }
    });
    return m;
}

namespace {

void render_all(const DatasetManifest& m, const DatasetConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    parallel_for(m.images.size(), [&](std::size_t i) {
        write_pgm(dir / m.images[i].file, render_entry(m, m.images[i], cfg));
    });
    write_manifest(dir / "manifest.json", m);
}

std::size_t count_conditions(const DatasetManifest& m) {
    std::set<std::string> labels;
    for (const auto& e : m.images) labels.insert(e.condition);
    return labels.size();
}

}  // namespace

DatasetSummary build_datasets(const DatasetConfig& cfg, const fs::path& root) {
    const DatasetManifest comparison = plan_comparison_set(cfg);
    const DatasetManifest rsa = plan_rsa_set(cfg);
    const DatasetManifest unsupervised = plan_unsupervised_set(cfg);

    render_all(comparison, cfg, root / "comparison");
    render_all(rsa, cfg, root / "rsa");
    render_all(unsupervised, cfg, root / "unsupervised");

    const PairSplit split =
        sample_model_pairs(comparison, cfg.train_pairs, cfg.test_pairs, derive_seed(cfg.master_seed, "model-pairs"));
    const auto human = sample_human_pairs(comparison, cfg.human_pairs, derive_seed(cfg.master_seed, "human-pairs"));
    fs::create_directories(root / "pairs");
    write_pairs_csv(root / "pairs" / "train.csv", split.train, comparison);
    write_pairs_csv(root / "pairs" / "test.csv", split.test, comparison);
    write_pairs_csv(root / "pairs" / "human.csv", human, comparison);

    DatasetSummary s;
    s.comparison_images = comparison.images.size();
    s.unsupervised_images = unsupervised.images.size();
    s.rsa_images = rsa.images.size();
    s.rsa_conditions = count_conditions(rsa);
    s.train_pairs = split.train.size();
    s.test_pairs = split.test.size();
    s.human_pairs = human.size();
    return s;
}

VerifyReport verify_dataset(const fs::path& dir, bool exact_count, double tsa_tolerance) {
    const DatasetManifest m = read_manifest(dir / "manifest.json");
    VerifyReport report;
    const double area_scale = m.length_scale() * m.length_scale();
    for (const auto& e : m.images) {
        ++report.checked;
        const fs::path file = dir / e.file;
        std::string problem;
        if (!fs::exists(file)) {
            problem = "missing";
        } else {
            const DotImage img = read_pgm(file);
            if (img.width != m.width || img.height != m.height) {
                problem = "wrong dimensions";
            } else {
                const Measurement meas = measure_image(img);
                const double expected_tsa = e.features.tsa * area_scale;
                if (exact_count ? meas.count != e.params.n() : meas.count > e.params.n()) {
                    problem = "count " + std::to_string(meas.count) + " vs n=" + std::to_string(e.params.n());
                } else if (std::abs(meas.features.tsa - expected_tsa) > tsa_tolerance * expected_tsa) {
                    problem = "TSA " + format_double(meas.features.tsa) + " vs " + format_double(expected_tsa);
                }
            }
        }
        if (!problem.empty()) {
            ++report.failures;
            report.messages.push_back(e.file + ": " + problem);
        }
    }
    return report;
}

}  // namespace numsense::render
