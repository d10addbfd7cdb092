#pragma once

#include <llctrack/error.hpp>
#include <llctrack/geometry.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace llctrack {

/// Side length of the square sampling grid; patches have kPatchSide² entries.
inline constexpr int kPatchSide = 32;
inline constexpr int kPatchLength = kPatchSide * kPatchSide;

/// Row-major grayscale image with intensities in [0, 1].
class GrayImage {
public:
    GrayImage() = default;

    GrayImage(int width, int height, double fill = 0.0)
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(checked_area(width, height)), fill)
    {}

    GrayImage(int width, int height, std::vector<double> data)
        : width_(width), height_(height), data_(std::move(data))
    {
        if (data_.size() != static_cast<std::size_t>(checked_area(width, height))) {
            throw Error(ErrorCode::InvalidArgument, "image data length must equal width*height");
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    double at(int x, int y) const { return data_[index(x, y)]; }
    double& at(int x, int y) { return data_[index(x, y)]; }

    /// Zero outside the frame.
    double at_or_zero(int x, int y) const
    {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return 0.0;
        return data_[index(x, y)];
    }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    static long checked_area(int width, int height)
    {
        if (width < 0 || height < 0) {
            throw Error(ErrorCode::InvalidArgument, "image dimensions must be nonnegative");
        }
        return static_cast<long>(width) * height;
    }

    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Interleaved 8-bit RGB as produced by a decoder.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;
};

inline GrayImage to_gray(const RgbImage& rgb)
{
    if (rgb.width <= 0 || rgb.height <= 0 ||
        rgb.data.size() != static_cast<std::size_t>(rgb.width) * rgb.height * 3) {
        throw Error(ErrorCode::DecodeError, "RGB buffer does not match its dimensions");
    }
    GrayImage out(rgb.width, rgb.height);
    auto dst = out.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double r = rgb.data[3 * i];
        const double g = rgb.data[3 * i + 1];
        const double b = rgb.data[3 * i + 2];
        dst[i] = (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
    }
    return out;
}

/// Unit ℓ2-norm patch of length kPatchLength.
class PatchVector {
public:
    PatchVector() = default;

    /// Divides by the ℓ2 norm; throws ZeroPatch on an all-zero input.
    static PatchVector normalize(Eigen::VectorXd raw)
    {
        if (raw.size() != kPatchLength) {
            throw Error(ErrorCode::InvalidArgument, "patch must have 1024 entries");
        }
        const double norm = raw.norm();
        if (!(norm > 1e-12) || !std::isfinite(norm)) {
            throw Error(ErrorCode::ZeroPatch, "patch has zero norm");
        }
        raw /= norm;
        return PatchVector(std::move(raw));
    }

    const Eigen::VectorXd& values() const { return values_; }

    friend bool operator==(const PatchVector& a, const PatchVector& b)
    {
        return a.values_ == b.values_;
    }

private:
    explicit PatchVector(Eigen::VectorXd values) : values_(std::move(values)) {}

    Eigen::VectorXd values_;
};

/// Bilinear sample at continuous coordinates; pixel centers sit at i + 0.5.
inline double sample_bilinear(const GrayImage& img, double x, double y)
{
    const double px = x - 0.5;
    const double py = y - 0.5;
    const double fx0 = std::floor(px);
    const double fy0 = std::floor(py);
    const double ax = px - fx0;
    const double ay = py - fy0;
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const double v00 = img.at_or_zero(x0, y0);
    const double v10 = img.at_or_zero(x0 + 1, y0);
    const double v01 = img.at_or_zero(x0, y0 + 1);
    const double v11 = img.at_or_zero(x0 + 1, y0 + 1);
    return (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) + ay * ((1.0 - ax) * v01 + ax * v11);
}

/// Samples the warped template box on a 32×32 grid without normalizing.
inline Eigen::VectorXd sample_patch(const GrayImage& img, const AffineState& state,
                                    Size2 template_box)
{
    if (!(template_box.w > 0.0) || !(template_box.h > 0.0) || !state.valid(template_box)) {
        throw Error(ErrorCode::DegenerateWarp, "warp maps the template to (near) zero area");
    }
    const auto l = state.linear();
    Eigen::VectorXd raw(kPatchLength);
    for (int r = 0; r < kPatchSide; ++r) {
        const double v = ((r + 0.5) / kPatchSide - 0.5) * template_box.h;
        for (int c = 0; c < kPatchSide; ++c) {
            const double u = ((c + 0.5) / kPatchSide - 0.5) * template_box.w;
            const double x = state.lx + l[0] * u + l[1] * v;
            const double y = state.ly + l[2] * u + l[3] * v;
            raw(r * kPatchSide + c) = sample_bilinear(img, x, y);
        }
    }
    return raw;
}

/// Warped, resampled and ℓ2-normalized patch.
inline PatchVector extract_patch(const GrayImage& img, const AffineState& state,
                                 Size2 template_box)
{
    return PatchVector::normalize(sample_patch(img, state, template_box));
}

} // namespace llctrack
