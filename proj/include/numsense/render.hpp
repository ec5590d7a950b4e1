#pragma once

// Binary dot-array rasterization and pixel-level feature measurement.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "numsense/errors.hpp"
#include "numsense/stimspace.hpp"

namespace numsense::render {

/// Random placement gave up; the parameters are too dense for the canvas.
class PlacementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The field circle does not fit on the canvas.
class CanvasTooSmall : public DomainError {
public:
    using DomainError::DomainError;
};

struct Dot {
    double x;  // pixel units, origin at the top-left corner of the canvas
    double y;
    double radius;
};

struct Canvas {
    int width = 200;
    int height = 200;
};

/// Row-major binary raster: 0 background, 1 dot.
struct DotImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
    std::vector<Dot> dots;  // empty when the image was loaded from disk

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t white_count() const;
};

struct RenderOptions {
    double min_gap = 1.0;  // px beyond tangency between neighbouring dots
    int max_retries = 10000;
};

/// Draws exactly p.n() non-overlapping dots of area ISA with centres uniform
/// inside a canvas-centred circle of area FA. A pixel is white iff its centre
/// lies inside a dot. Candidate centres whose dot would cross the canvas edge
/// are rejected like overlapping ones. Deterministic in `seed`.
DotImage render_image(const stimspace::StimulusParams& p, Canvas canvas, std::uint64_t seed,
                      const RenderOptions& options = {});

struct Measurement {
    int count = 0;
    stimspace::FeatureVector features{};
    std::vector<Dot> dots;  // centroid and equivalent radius per component
};

/// Recovers the dot count (4-connected components) and features from pixels:
///   TSA = white pixels, ISA = TSA / count,
///   FA  = area of the minimal circle enclosing the component centroids,
///         grown by the mean equivalent dot radius,
///   TP  = (white/black pixel edges) * pi / 4, which converges to the true
///         circumference for digitised discs.
/// Throws DomainError on an image with no white pixels.
Measurement measure_image(const DotImage& img);

}  // namespace numsense::render
