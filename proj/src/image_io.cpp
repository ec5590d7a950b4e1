#include "numsense/image_io.hpp"

#include <fstream>
#include <string>

namespace numsense::render {

void write_pgm(const std::filesystem::path& path, const DotImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    std::string row(static_cast<std::size_t>(img.width), '\0');
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) row[static_cast<std::size_t>(x)] = img.at(x, y) ? '\xff' : '\0';
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

}  // namespace

DotImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    if (next_token(in) != "P5") throw SchemaError(path.string() + ": not a binary PGM (P5)");
    DotImage img;
    try {
        img.width = std::stoi(next_token(in));
        img.height = std::stoi(next_token(in));
        if (std::stoi(next_token(in)) != 255) throw SchemaError(path.string() + ": maxval must be 255");
    } catch (const std::logic_error&) {
        throw SchemaError(path.string() + ": malformed PGM header");
    }
    if (img.width <= 0 || img.height <= 0) throw SchemaError(path.string() + ": bad dimensions");
    std::string raw(static_cast<std::size_t>(img.width) * img.height, '\0');
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw SchemaError(path.string() + ": truncated");
    img.pixels.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto v = static_cast<unsigned char>(raw[i]);
        if (v != 0 && v != 255) {
            throw SchemaError(path.string() + ": pixel " + std::to_string(i) + " is neither 0 nor 255");
        }
        img.pixels[i] = v ? 1 : 0;
    }
    return img;
}

}  // namespace numsense::render
