#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "pnn/dataio.hpp"
#include "pnn/rng.hpp"

namespace pnn {

/// Deterministic synthetic handwritten-digit generator. Each digit is a set
/// of strokes on a unit canvas; every sample applies a random affine jitter
/// (shift, rotation, scale, shear), stroke-thickness and ink variation, and
/// per-pixel noise, then rasterizes to 28x28 bytes. Identical seeds give
/// identical datasets, so training fixtures are reproducible without any
/// external data. Not a substitute for real handwriting when absolute
/// accuracy numbers matter.
struct SynthConfig {
    std::size_t train_count = 12000;
    std::size_t eval_count = 10000;
    std::uint64_t seed = 7001;
    double noise_stddev = 0.10;  // additive per-pixel noise before quantization
    double jitter = 1.0;         // scales every geometric perturbation
};

namespace synth_detail {

struct Point {
    double x, y;
};

using Polyline = std::vector<Point>;

inline Polyline line(double x0, double y0, double x1, double y1) {
    return {{x0, y0}, {x1, y1}};
}

/// Elliptic arc sampled as a polyline; theta 0 points right, pi/2 down.
inline Polyline arc(double cx, double cy, double rx, double ry, double theta0, double theta1,
                    int segments = 26) {
    Polyline p;
    p.reserve(segments + 1);
    for (int i = 0; i <= segments; ++i) {
        const double t = theta0 + (theta1 - theta0) * i / segments;
        p.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
    }
    return p;
}

inline Polyline ellipse(double cx, double cy, double rx, double ry) {
    return arc(cx, cy, rx, ry, 0.0, 2.0 * 3.141592653589793, 40);
}

inline std::vector<Polyline> glyph(int digit) {
    switch (digit) {
        case 0:
            return {ellipse(0.50, 0.50, 0.24, 0.34)};
        case 1:
            return {line(0.52, 0.14, 0.52, 0.86), line(0.52, 0.14, 0.40, 0.26)};
        case 2:
            return {arc(0.50, 0.34, 0.20, 0.20, -3.141592653589793, 0.63),
                    line(0.66, 0.46, 0.30, 0.84), line(0.30, 0.84, 0.72, 0.84)};
        case 3:
            return {arc(0.47, 0.33, 0.16, 0.16, -2.40, 1.5707963267948966),
                    arc(0.47, 0.66, 0.19, 0.19, -1.5707963267948966, 2.51)};
        case 4:
            return {line(0.60, 0.12, 0.26, 0.60), line(0.26, 0.60, 0.76, 0.60),
                    line(0.60, 0.12, 0.60, 0.88)};
        case 5:
            return {line(0.66, 0.14, 0.34, 0.14), line(0.34, 0.14, 0.32, 0.45),
                    arc(0.47, 0.64, 0.20, 0.20, -2.32, 2.67)};
        case 6:
            return {Polyline{{0.63, 0.12}, {0.55, 0.25}, {0.45, 0.42}, {0.39, 0.58}},
                    ellipse(0.47, 0.63, 0.21, 0.21)};
        case 7:
            return {line(0.28, 0.16, 0.72, 0.16), line(0.72, 0.16, 0.40, 0.88)};
        case 8:
            return {ellipse(0.50, 0.32, 0.15, 0.16), ellipse(0.50, 0.67, 0.19, 0.18)};
        case 9:
            return {ellipse(0.52, 0.36, 0.17, 0.17),
                    Polyline{{0.69, 0.36}, {0.67, 0.55}, {0.60, 0.73}, {0.50, 0.88}}};
        default:
            throw ConfigError(detail::msg("glyph: digit ", digit, " out of range"));
    }
}

inline double dist_to_segment(double px, double py, const Point& a, const Point& b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double qx = a.x + t * dx, qy = a.y + t * dy;
    return std::sqrt((px - qx) * (px - qx) + (py - qy) * (py - qy));
}

}  // namespace synth_detail

/// Renders one digit sample to 784 bytes. Consumes a fixed pattern of draws
/// from rng, so a sample sequence is reproducible from the seed alone.
inline std::vector<std::uint8_t> synth_image(int digit, Rng& rng, const SynthConfig& cfg) {
    using synth_detail::Point;
    const double j = cfg.jitter;
    const double dx = std::clamp(rng.gaussian(0.0, 1.7 * j), -3.5, 3.5);
    const double dy = std::clamp(rng.gaussian(0.0, 1.7 * j), -3.5, 3.5);
    const double rot = std::clamp(rng.gaussian(0.0, 0.13 * j), -0.40, 0.40);
    const double scale = std::clamp(rng.gaussian(1.0, 0.09 * j), 0.78, 1.22);
    const double shear = std::clamp(rng.gaussian(0.0, 0.18 * j), -0.55, 0.55);
    const double thickness = std::clamp(1.05 * std::exp(rng.gaussian(0.0, 0.22 * j)), 0.55, 2.3);
    const double ink = std::clamp(rng.gaussian(0.95, 0.10 * j), 0.55, 1.0);

    // rotation * scale * shear, applied about the canvas center
    const double c = std::cos(rot), s = std::sin(rot);
    const double m00 = scale * c, m01 = scale * (c * shear - s);
    const double m10 = scale * s, m11 = scale * (s * shear + c);

    const double side = static_cast<double>(kImageSide);
    const auto transform = [&](const Point& p) -> Point {
        const double x = p.x - 0.5, y = p.y - 0.5;
        return {(m00 * x + m01 * y + 0.5) * side + dx, (m10 * x + m11 * y + 0.5) * side + dy};
    };

    std::vector<double> canvas(kImagePixels, 0.0);
    const double aa = 1.0;  // falloff band in pixels
    for (const auto& poly : synth_detail::glyph(digit)) {
        for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
            const Point a = transform(poly[i]);
            const Point b = transform(poly[i + 1]);
            const double reach = thickness + aa;
            const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - reach)));
            const int x1 = std::min<int>(kImageSide - 1,
                                         static_cast<int>(std::ceil(std::max(a.x, b.x) + reach)));
            const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - reach)));
            const int y1 = std::min<int>(kImageSide - 1,
                                         static_cast<int>(std::ceil(std::max(a.y, b.y) + reach)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double d = synth_detail::dist_to_segment(x + 0.5, y + 0.5, a, b);
                    const double v = std::clamp((thickness + aa - d) / aa, 0.0, 1.0);
                    double& cell = canvas[static_cast<std::size_t>(y) * kImageSide + x];
                    if (v > cell) cell = v;
                }
            }
        }
    }

    std::vector<std::uint8_t> bytes(kImagePixels);
    for (std::size_t i = 0; i < kImagePixels; ++i) {
        const double noisy = canvas[i] * ink + rng.gaussian(0.0, cfg.noise_stddev);
        bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(noisy, 0.0, 1.0) * 255.0));
    }
    return bytes;
}

struct SynthSet {
    std::vector<std::vector<std::uint8_t>> images;
    std::vector<int> labels;
};

/// Balanced label sequence: every block of ten holds a shuffled permutation
/// of the digits, so any prefix is close to class-balanced.
inline SynthSet synth_set(std::size_t count, Rng& rng, const SynthConfig& cfg) {
    SynthSet set;
    set.images.reserve(count);
    set.labels.reserve(count);
    std::vector<int> block(10);
    for (std::size_t i = 0; i < count; ++i) {
        if (i % 10 == 0) {
            std::iota(block.begin(), block.end(), 0);
            rng.shuffle(block);
        }
        set.labels.push_back(block[i % 10]);
        set.images.push_back(synth_image(block[i % 10], rng, cfg));
    }
    return set;
}

/// In-memory examples for tests (normalized like the IDX loader).
inline std::vector<Example> synth_examples(std::size_t count, std::uint64_t seed,
                                           const SynthConfig& base = {}) {
    SynthConfig cfg = base;
    cfg.seed = seed;
    Rng rng(seed);
    const SynthSet set = synth_set(count, rng, cfg);
    std::vector<Example> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Vector v(kImagePixels);
        for (std::size_t p = 0; p < kImagePixels; ++p) v.data[p] = set.images[i][p] / 255.0;
        out.push_back(Example{std::move(v), set.labels[i]});
    }
    return out;
}

/// Writes the standard four-file IDX layout (training and evaluation sets
/// from independent streams of cfg.seed) into dir, optionally gzipped.
inline void write_synth_dataset(const std::string& dir, const SynthConfig& cfg,
                                bool gzip = false) {
    std::filesystem::create_directories(dir);
    const Rng base(cfg.seed);
    Rng train_rng = base.child(11);
    const SynthSet train = synth_set(cfg.train_count, train_rng, cfg);
    Rng eval_rng = base.child(12);
    const SynthSet eval = synth_set(cfg.eval_count, eval_rng, cfg);
    namespace fs = std::filesystem;
    const std::string suffix = gzip ? ".gz" : "";
    write_idx_images((fs::path(dir) / ("train-images-idx3-ubyte" + suffix)).string(),
                     train.images);
    write_idx_labels((fs::path(dir) / ("train-labels-idx1-ubyte" + suffix)).string(),
                     train.labels);
    write_idx_images((fs::path(dir) / ("t10k-images-idx3-ubyte" + suffix)).string(), eval.images);
    write_idx_labels((fs::path(dir) / ("t10k-labels-idx1-ubyte" + suffix)).string(), eval.labels);
}

}  // namespace pnn
