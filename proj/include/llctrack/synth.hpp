#pragma once

#include <llctrack/error.hpp>
#include <llctrack/geometry.hpp>
#include <llctrack/image_io.hpp>
#include <llctrack/imaging.hpp>
#include <llctrack/particle_tracker.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace llctrack {

enum class SynthKind { MovingSquare, Occlusion };

struct SynthOptions {
    int width = 320;
    int height = 240;
    int target_size = 40;
    /// Texture cell size of the target, in pixels.
    int cell = 5;
    /// Fraction of the target width hidden by the occluder.
    double occluded_fraction = 0.65;
    double noise_sigma = 0.02;
    /// Cell size of the background value noise, in pixels.
    int background_cell = 8;
    double background_lo = 0.0;
    double background_hi = 1.0;
    double texture_lo = 0.0;
    double texture_hi = 1.0;
    /// Per-frame target velocity (pixels) for each kind.
    Point2 square_velocity{1.2, 0.5};
    Point2 occlusion_velocity{0.6, 0.3};
    /// The occluder shows the background found at this offset from the
    /// occluded pixel, i.e. texture from the negative-template annulus.
    Point2 occluder_source{-30.0, 0.0};
};

struct SyntheticSequence {
    std::vector<GrayImage> frames;
    std::vector<BoundingBox> truth;
    std::vector<bool> occluded;
};

inline SynthKind parse_synth_kind(const std::string& s)
{
    if (s == "moving-square") return SynthKind::MovingSquare;
    if (s == "occlusion") return SynthKind::Occlusion;
    throw Error(ErrorCode::InvalidArgument, "unknown sequence kind '" + s + "'");
}

/// First and last (1-based, inclusive) occluded frame of an N-frame
/// occlusion sequence.
inline std::pair<int, int> occlusion_span(int frames) { return {frames / 3, 2 * frames / 3}; }

namespace detail {

/// Smooth value noise: random values on a coarse grid, bilinearly blended.
class ValueNoise {
public:
    ValueNoise(int width, int height, int cell, double lo, double hi, std::mt19937_64& rng)
        : cell_(cell), cols_(width / cell + 3), rows_(height / cell + 3)
    {
        std::uniform_real_distribution<double> dist(lo, hi);
        grid_.resize(static_cast<std::size_t>(cols_ * rows_));
        for (auto& v : grid_) v = dist(rng);
    }

    double operator()(double x, double y) const
    {
        const double gx = x / cell_;
        const double gy = y / cell_;
        const int x0 = static_cast<int>(std::floor(gx));
        const int y0 = static_cast<int>(std::floor(gy));
        const double ax = gx - x0;
        const double ay = gy - y0;
        return (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0)) +
               ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
    }

private:
    double at(int x, int y) const
    {
        x = ((x % cols_) + cols_) % cols_;
        y = ((y % rows_) + rows_) % rows_;
        return grid_[static_cast<std::size_t>(y * cols_ + x)];
    }

    int cell_;
    int cols_;
    int rows_;
    std::vector<double> grid_;
};

} // namespace detail

/**
 * Generates a textured square moving at constant velocity over a smooth
 * random background with per-frame sensor noise. The occlusion kind slides
 * a background-textured occluder over the left part of the target for the
 * middle third of the sequence. Frames are quantized to 8 bits so that
 * writing them as PGM is lossless.
 */
inline SyntheticSequence generate_sequence(SynthKind kind, int frames, std::uint64_t seed,
                                           const SynthOptions& opt = {})
{
    if (frames < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 frames");
    std::mt19937_64 rng(mix_seed(seed, 0x5157));
    const detail::ValueNoise background(opt.width, opt.height, opt.background_cell,
                                       opt.background_lo, opt.background_hi, rng);

    const int cells = (opt.target_size + opt.cell - 1) / opt.cell;
    std::vector<double> texture(static_cast<std::size_t>(cells * cells));
    std::uniform_real_distribution<double> tex(opt.texture_lo, opt.texture_hi);
    for (auto& v : texture) v = tex(rng);

    const bool occlusion = kind == SynthKind::Occlusion;
    const double start_x = 60.0;
    const double start_y = 80.0;
    const Point2 velocity = occlusion ? opt.occlusion_velocity : opt.square_velocity;
    const double vx = velocity.x;
    const double vy = velocity.y;
    const auto [occ_first, occ_last] = occlusion_span(frames);
    const double size = opt.target_size;
    const double occ_width = opt.occluded_fraction * size;

    SyntheticSequence seq;
    seq.frames.reserve(static_cast<std::size_t>(frames));
    constexpr int kSuper = 4;
    for (int f = 1; f <= frames; ++f) {
        const double tx = start_x + vx * (f - 1);
        const double ty = start_y + vy * (f - 1);
        const bool occ = occlusion && f >= occ_first && f <= occ_last;
        seq.truth.push_back({tx, ty, size, size});
        seq.occluded.push_back(occ);

        SplitMix64 noise_rng(mix_seed(seed, static_cast<std::uint64_t>(f), 0x4e));
        std::normal_distribution<double> noise(0.0, opt.noise_sigma);
        GrayImage img(opt.width, opt.height);
        for (int py = 0; py < opt.height; ++py) {
            for (int px = 0; px < opt.width; ++px) {
                double acc = 0.0;
                for (int sy = 0; sy < kSuper; ++sy) {
                    for (int sx = 0; sx < kSuper; ++sx) {
                        const double x = px + (sx + 0.5) / kSuper;
                        const double y = py + (sy + 0.5) / kSuper;
                        const double u = x - tx;
                        const double v = y - ty;
                        double value;
                        if (u >= 0 && v >= 0 && u < size && v < size) {
                            if (occ && u < occ_width) {
                                value = background(x + opt.occluder_source.x,
                                                   y + opt.occluder_source.y);
                            } else {
                                const int cx = static_cast<int>(u) / opt.cell;
                                const int cy = static_cast<int>(v) / opt.cell;
                                value = texture[static_cast<std::size_t>(cy * cells + cx)];
                            }
                        } else {
                            value = background(x, y);
                        }
                        acc += value;
                    }
                }
                const double pixel = acc / (kSuper * kSuper) + noise(noise_rng);
                img.at(px, py) = std::round(std::clamp(pixel, 0.0, 1.0) * 255.0) / 255.0;
            }
        }
        seq.frames.push_back(std::move(img));
    }
    return seq;
}

inline std::string format_box(const BoundingBox& b)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f,%.2f", b.x, b.y, b.w, b.h);
    return buf;
}

/// Writes img/0001.<ext>… and groundtruth_rect.txt under `dir`.
inline void write_sequence(const std::filesystem::path& dir, const SyntheticSequence& seq,
                           const std::string& extension = "pgm")
{
    std::error_code ec;
    std::filesystem::create_directories(dir / "img", ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + (dir / "img").string());
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%04zu.%s", i + 1, extension.c_str());
        const auto path = dir / "img" / name;
        if (extension == "pgm") {
            write_pgm(path, seq.frames[i]);
        } else {
            write_image(path, seq.frames[i]);
        }
    }
    std::ofstream gt(dir / "groundtruth_rect.txt");
    if (!gt) throw Error(ErrorCode::Io, "cannot write groundtruth_rect.txt");
    for (const auto& b : seq.truth) gt << format_box(b) << '\n';
}

} // namespace llctrack
