#pragma once

#include <filesystem>

#include "numsense/render.hpp"

namespace numsense::render {

/// Binary PGM (P5), maxval 255, pixels exactly 0 or 255.
void write_pgm(const std::filesystem::path& path, const DotImage& img);

/// Reads a P5 file written by write_pgm. Any pixel other than 0/255 is a SchemaError.
DotImage read_pgm(const std::filesystem::path& path);

}  // namespace numsense::render
