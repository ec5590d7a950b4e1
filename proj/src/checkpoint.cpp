#include "numsense/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "numsense/errors.hpp"

namespace numsense::dbn {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

bool get_u32(std::istream& in, std::uint32_t& v) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

double get_f64(std::istream& in, const fs::path& path) {
    double v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw SchemaError(path.string() + ": truncated layer data");
    return v;
}

}  // namespace

fs::path sidecar_path(const fs::path& path) { return fs::path(path.string() + ".json"); }

void write_layers(const fs::path& path, const std::vector<Rbm>& layers) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write("NSLB", 4);
    out.put(static_cast<char>(kCheckpointVersion));
    for (const Rbm& l : layers) {
        const auto rows = static_cast<std::uint32_t>(l.weights.rows());
        const auto cols = static_cast<std::uint32_t>(l.weights.cols());
        put_u32(out, rows);
        put_u32(out, cols);
        for (std::uint32_t i = 0; i < rows; ++i) {
            for (std::uint32_t j = 0; j < cols; ++j) put_f64(out, l.weights(i, j));
        }
        for (std::uint32_t j = 0; j < cols; ++j) put_f64(out, l.visible_bias(j));
        for (std::uint32_t i = 0; i < rows; ++i) put_f64(out, l.hidden_bias(i));
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Rbm> read_layers(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "NSLB", 4) != 0) throw SchemaError(path.string() + ": bad magic");
    const int version = in.get();
    if (version != kCheckpointVersion) throw SchemaError(path.string() + ": unsupported version " + std::to_string(version));
    std::vector<Rbm> layers;
    std::uint32_t rows;
    while (get_u32(in, rows)) {
        std::uint32_t cols;
        if (!get_u32(in, cols)) throw SchemaError(path.string() + ": truncated layer header");
        Rbm l(cols, rows);
        for (std::uint32_t i = 0; i < rows; ++i) {
            for (std::uint32_t j = 0; j < cols; ++j) l.weights(i, j) = get_f64(in, path);
        }
        for (std::uint32_t j = 0; j < cols; ++j) l.visible_bias(j) = get_f64(in, path);
        for (std::uint32_t i = 0; i < rows; ++i) l.hidden_bias(i) = get_f64(in, path);
        layers.push_back(std::move(l));
    }
    return layers;
}

void save_dbn(const fs::path& path, const Dbn& dbn, const nlohmann::json& meta) {
    write_layers(path, dbn.layers);
    nlohmann::json shapes = nlohmann::json::array();
    for (const Rbm& l : dbn.layers) shapes.push_back({l.visible_size(), l.hidden_size()});
    const nlohmann::json doc = {{"tag", dbn.tag}, {"epoch", dbn.epoch}, {"layers", shapes}, {"meta", meta}};
    std::ofstream out(sidecar_path(path));
    if (!out) throw std::runtime_error("cannot write " + sidecar_path(path).string());
    out << doc.dump(2) << '\n';
}

Dbn load_dbn(const fs::path& path) {
    Dbn dbn;
    dbn.layers = read_layers(path);
    std::ifstream in(sidecar_path(path));
    if (in) {
        try {
            const auto doc = nlohmann::json::parse(in);
            dbn.tag = doc.value("tag", "");
            dbn.epoch = doc.value("epoch", 0);
        } catch (const nlohmann::json::exception& ex) {
            throw SchemaError(sidecar_path(path).string() + ": " + ex.what());
        }
    }
    for (std::size_t k = 1; k < dbn.layers.size(); ++k) {
        if (dbn.layers[k].visible_size() != dbn.layers[k - 1].hidden_size()) {
            throw SchemaError(path.string() + ": layer sizes do not chain");
        }
    }
    return dbn;
}

}  // namespace numsense::dbn
