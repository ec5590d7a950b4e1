#include "numsense/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace numsense::render {

using stimspace::StimulusParams;

std::size_t DotImage::white_count() const {
    return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
}

namespace {

void rasterize(DotImage& img) {
    img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 0);
    for (const Dot& d : img.dots) {
        const int x0 = std::max(0, static_cast<int>(std::floor(d.x - d.radius)));
        const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(d.x + d.radius)));
        const int y0 = std::max(0, static_cast<int>(std::floor(d.y - d.radius)));
        const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(d.y + d.radius)));
        const double r2 = d.radius * d.radius;
        for (int y = y0; y <= y1; ++y) {
            const double dy = y + 0.5 - d.y;
            for (int x = x0; x <= x1; ++x) {
                const double dx = x + 0.5 - d.x;
                if (dx * dx + dy * dy <= r2) img.pixels[static_cast<std::size_t>(y) * img.width + x] = 1;
            }
        }
    }
}

}  // namespace

DotImage render_image(const StimulusParams& p, Canvas canvas, std::uint64_t seed, const RenderOptions& options) {
    if (canvas.width < 1 || canvas.height < 1) throw CanvasTooSmall("canvas must have positive dimensions");
    const stimspace::FeatureVector f = stimspace::derive_features(p);
    const double field_radius = std::sqrt(f.fa / std::numbers::pi);
    const double dot_radius = std::sqrt(f.isa / std::numbers::pi);
    const double cx = canvas.width / 2.0;
    const double cy = canvas.height / 2.0;
    if (field_radius > std::min(cx, cy) || 2.0 * dot_radius > std::min(canvas.width, canvas.height)) {
        std::ostringstream msg;
        msg << "canvas " << canvas.width << "x" << canvas.height << " cannot hold a field of radius "
            << field_radius << " px";
        throw CanvasTooSmall(msg.str());
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double min_dist = 2.0 * dot_radius + options.min_gap;
    const double min_dist2 = min_dist * min_dist;

    DotImage img;
    img.width = canvas.width;
    img.height = canvas.height;
    img.dots.reserve(static_cast<std::size_t>(p.n()));
    int attempts = 0;
    while (static_cast<int>(img.dots.size()) < p.n()) {
        if (attempts++ >= options.max_retries) {
            std::ostringstream msg;
            msg << "placed " << img.dots.size() << " of " << p.n() << " dots after " << options.max_retries
                << " attempts (n=" << p.n() << ", size=" << p.size() << ", spacing=" << p.spacing() << ")";
            throw PlacementError(msg.str());
        }
        const double rho = field_radius * std::sqrt(unit(rng));
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        const double x = cx + rho * std::cos(theta);
        const double y = cy + rho * std::sin(theta);
        if (x - dot_radius < 0.0 || x + dot_radius > canvas.width || y - dot_radius < 0.0 ||
            y + dot_radius > canvas.height) {
            continue;
        }
        const bool clear = std::none_of(img.dots.begin(), img.dots.end(), [&](const Dot& d) {
            const double dx = d.x - x;
            const double dy = d.y - y;
            return dx * dx + dy * dy <= min_dist2;
        });
        if (clear) img.dots.push_back({x, y, dot_radius});
    }
    rasterize(img);
    return img;
}

namespace {

struct Circle {
    double x = 0.0;
    double y = 0.0;
    double r = -1.0;

    bool contains(const Dot& p) const {
        return r >= 0.0 && std::hypot(p.x - x, p.y - y) <= r * (1.0 + 1e-12) + 1e-12;
    }
};

Circle circle_from(const Dot& a, const Dot& b) {
    return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0, std::hypot(a.x - b.x, a.y - b.y) / 2.0};
}

Circle circle_from(const Dot& a, const Dot& b, const Dot& c) {
    const double bx = b.x - a.x, by = b.y - a.y;
    const double cx = c.x - a.x, cy = c.y - a.y;
    const double d = 2.0 * (bx * cy - by * cx);
    if (std::abs(d) < 1e-12) {
        // Collinear: the widest pair spans the other point.
        Circle best = circle_from(a, b);
        for (const Circle& cand : {circle_from(a, c), circle_from(b, c)}) {
            if (cand.r > best.r) best = cand;
        }
        return best;
    }
    const double b2 = bx * bx + by * by;
    const double c2 = cx * cx + cy * cy;
    const double ux = (cy * b2 - by * c2) / d;
    const double uy = (bx * c2 - cx * b2) / d;
    return {a.x + ux, a.y + uy, std::hypot(ux, uy)};
}

Circle minimal_enclosing_circle(const std::vector<Dot>& pts) {
    Circle c;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (c.contains(pts[i])) continue;
        c = {pts[i].x, pts[i].y, 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (c.contains(pts[j])) continue;
            c = circle_from(pts[i], pts[j]);
            for (std::size_t k = 0; k < j; ++k) {
                if (!c.contains(pts[k])) c = circle_from(pts[i], pts[j], pts[k]);
            }
        }
    }
    return c;
}

}  // namespace

Measurement measure_image(const DotImage& img) {
    const int w = img.width;
    const int h = img.height;
    std::vector<int> label(img.pixels.size(), -1);
    std::vector<std::size_t> stack;
    Measurement m;
    std::vector<double> sum_x, sum_y, area;
    std::size_t white = 0;
    std::size_t edges = 0;

    auto is_white = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < w && y < h && img.pixels[static_cast<std::size_t>(y) * w + x] != 0;
    };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (img.pixels[idx] == 0) continue;
            ++white;
            edges += !is_white(x - 1, y) + !is_white(x + 1, y) + !is_white(x, y - 1) + !is_white(x, y + 1);
            if (label[idx] >= 0) continue;
            const int id = m.count++;
            sum_x.push_back(0.0);
            sum_y.push_back(0.0);
            area.push_back(0.0);
            label[idx] = id;
            stack.push_back(idx);
            while (!stack.empty()) {
                const std::size_t cur = stack.back();
                stack.pop_back();
                const int px = static_cast<int>(cur % w);
                const int py = static_cast<int>(cur / w);
                sum_x[id] += px + 0.5;
                sum_y[id] += py + 0.5;
                area[id] += 1.0;
                const int nx[4] = {px - 1, px + 1, px, px};
                const int ny[4] = {py, py, py - 1, py + 1};
                for (int k = 0; k < 4; ++k) {
                    if (!is_white(nx[k], ny[k])) continue;
                    const std::size_t nidx = static_cast<std::size_t>(ny[k]) * w + nx[k];
                    if (label[nidx] < 0) {
                        label[nidx] = id;
                        stack.push_back(nidx);
                    }
                }
            }
        }
    }
    if (m.count == 0) throw DomainError("image contains no dots");

    for (int i = 0; i < m.count; ++i) {
        m.dots.push_back({sum_x[i] / area[i], sum_y[i] / area[i], std::sqrt(area[i] / std::numbers::pi)});
    }
    const double tsa = static_cast<double>(white);
    const double isa = tsa / m.count;
    const double mean_radius = std::sqrt(isa / std::numbers::pi);
    const Circle mec = minimal_enclosing_circle(m.dots);
    const double field_radius = mec.r + mean_radius;

    stimspace::FeatureVector& f = m.features;
    f.tsa = tsa;
    f.isa = isa;
    f.fa = std::numbers::pi * field_radius * field_radius;
    f.spar = f.fa / m.count;
    f.tp = static_cast<double>(edges) * std::numbers::pi / 4.0;
    f.ip = f.tp / m.count;
    f.cov = f.tsa / f.fa;
    f.ac = std::sqrt(f.tsa * f.isa * f.fa * f.spar);
    return m;
}

}  // namespace numsense::render
