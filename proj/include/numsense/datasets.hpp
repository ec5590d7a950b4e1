#pragma once

// Persisted stimulus datasets: the comparison grid, the unsupervised training
// set, the 27-condition RSA set, and the pair lists drawn from the grid.
//
// All parameters in a manifest are expressed at the reference canvas (200 px);
// images are rendered at `canvas` px by scaling lengths with canvas/reference.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "numsense/choice.hpp"
#include "numsense/render.hpp"
#include "numsense/stimspace.hpp"

namespace numsense::render {

inline constexpr int kManifestSchemaVersion = 1;

struct ManifestEntry {
    std::string file;
    stimspace::StimulusParams params;
    stimspace::FeatureVector features;
    int instance = 0;
    std::uint64_t seed = 0;
    std::string condition;  // grid cell label; images of one cell share it
};

struct DatasetManifest {
    int schema_version = kManifestSchemaVersion;
    std::string name;
    int width = 0;
    int height = 0;
    int reference_canvas = 200;
    std::vector<ManifestEntry> images;

    double length_scale() const { return static_cast<double>(width) / reference_canvas; }
    /// Index of the entry with the given file name; throws SchemaError if absent.
    std::size_t index_of(const std::string& file) const;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

using numsense::Side;

struct ImagePair {
    int pair_id = 0;
    std::size_t left = 0;  // manifest indices
    std::size_t right = 0;
    double r_num = 1.0;  // right / left
    double r_size = 1.0;
    double r_spacing = 1.0;
    Side correct_side = Side::Left;
};

ImagePair make_pair(const DatasetManifest& m, int pair_id, std::size_t left, std::size_t right);

/// Train and test lists of uniformly drawn image pairs with different
/// numerosities. No unordered image pair appears twice across both lists.
struct PairSplit {
    std::vector<ImagePair> train;
    std::vector<ImagePair> test;
};
PairSplit sample_model_pairs(const DatasetManifest& m, int train_count, int test_count, std::uint64_t seed);

/// Numerosity-ratio (smaller/larger) buckets of the human protocol with their
/// target shares: 10% in [0.5, 0.6), 20% in [0.6, 0.7), 30% in [0.7, 0.8),
/// 40% in [0.8, 0.9].
struct RatioBucket {
    double lo;
    double hi;
    double share;
};
const std::vector<RatioBucket>& human_ratio_buckets();

/// Index into human_ratio_buckets() for a ratio, or -1 outside all buckets.
int ratio_bucket(double ratio);

/// Exact per-bucket counts for `total` pairs (largest-remainder rounding).
std::vector<int> bucket_counts(int total);

std::vector<ImagePair> sample_human_pairs(const DatasetManifest& m, int count, std::uint64_t seed);

void write_pairs_csv(const std::filesystem::path& path, const std::vector<ImagePair>& pairs,
                     const DatasetManifest& m);
std::vector<ImagePair> read_pairs_csv(const std::filesystem::path& path, const DatasetManifest& m);

struct UnsupervisedSpec {
    int count = 2000;
    stimspace::Range n_range{5, 32};
    stimspace::Range size_range{2.6e5, 10.4e5};
    stimspace::Range spacing_range{0.8e7, 3.2e7};
};

struct RsaSetSpec {
    std::vector<int> n_levels{7, 18, 28};
    std::vector<double> size_levels{2.60e5, 6.55e5, 10.40e5};
    std::vector<double> spacing_levels{0.80e7, 2.02e7, 3.20e7};
    int instances = 10;
};

struct DatasetConfig {
    int reference_canvas = 200;
    int canvas = 200;
    double min_gap_px = 1.0;  // at the reference canvas
    int max_retries = 10000;
    stimspace::GridSpec grid;
    int instances = 10;
    int train_pairs = 15200;
    int test_pairs = 15200;
    int human_pairs = 300;
    UnsupervisedSpec unsupervised;
    RsaSetSpec rsa;
    std::uint64_t master_seed = 0;
};

/// Renders one manifest entry at the manifest's canvas size.
DotImage render_entry(const DatasetManifest& m, const ManifestEntry& e, const DatasetConfig& cfg);

DatasetManifest plan_comparison_set(const DatasetConfig& cfg);
DatasetManifest plan_rsa_set(const DatasetConfig& cfg);
/// Draws the unsupervised parameters (n cycling over n_range, Size and Spacing
/// log-uniform, redrawn until renderable). Rendering happens in build_datasets.
DatasetManifest plan_unsupervised_set(const DatasetConfig& cfg);

struct DatasetSummary {
    std::size_t comparison_images = 0;
    std::size_t unsupervised_images = 0;
    std::size_t rsa_images = 0;
    std::size_t rsa_conditions = 0;
    std::size_t train_pairs = 0;
    std::size_t test_pairs = 0;
    std::size_t human_pairs = 0;
};

/// Writes <root>/{comparison,unsupervised,rsa}/ (PGMs + manifest.json) and
/// <root>/pairs/{train,test,human}.csv.
DatasetSummary build_datasets(const DatasetConfig& cfg, const std::filesystem::path& root);

/// Re-measures every image of a dataset directory: the file exists, the
/// component count is at most n (exactly n when `exact_count`), and the white
/// pixel area is within `tsa_tolerance` of the scaled analytic TSA.
struct VerifyReport {
    std::size_t checked = 0;
    std::size_t failures = 0;
    std::vector<std::string> messages;
};
VerifyReport verify_dataset(const std::filesystem::path& dir, bool exact_count, double tsa_tolerance);

}  // namespace numsense::render
