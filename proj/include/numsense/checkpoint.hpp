#pragma once

// Binary layer container, little-endian:
//   "NSLB" | u8 version | per layer: u32 rows, u32 cols,
//   rows*cols f64 weights (row-major), cols f64 visible biases, rows f64 hidden biases
// Layers follow each other until end of file. A JSON sidecar (<file>.json)
// carries the tag, epoch and training configuration.

#include <filesystem>
#include <vector>

#include "json.hpp"
#include "numsense/dbn.hpp"

namespace numsense::dbn {

inline constexpr std::uint8_t kCheckpointVersion = 1;

void write_layers(const std::filesystem::path& path, const std::vector<Rbm>& layers);
std::vector<Rbm> read_layers(const std::filesystem::path& path);

/// Writes the layers plus `<path>.json` with {tag, epoch, layers: [[visible, hidden], ...], meta}.
void save_dbn(const std::filesystem::path& path, const Dbn& dbn, const nlohmann::json& meta = nlohmann::json::object());
Dbn load_dbn(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace numsense::dbn
