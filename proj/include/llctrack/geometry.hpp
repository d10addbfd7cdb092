#pragma once

#include <llctrack/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace llctrack {

/// Axis-aligned box in pixels. Pixel (i, j) covers [i, i+1) × [j, j+1).
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double center_x() const { return x + 0.5 * w; }
    double center_y() const { return y + 0.5 * h; }
    double area() const { return w * h; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Size2 {
    double w = 0.0;
    double h = 0.0;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/**
 * Six-parameter affine target state [lx, ly, θ, s, α, φ].
 *
 * (lx, ly) is the target center in continuous image coordinates. The linear
 * part applied to the template box is s · R(θ) · [[1, φ], [0, α]].
 */
struct AffineState {
    double lx = 0.0;
    double ly = 0.0;
    double theta = 0.0;
    double scale = 1.0;
    double aspect = 1.0;
    double skew = 0.0;

    static constexpr std::size_t kDims = 6;

    std::array<double, kDims> as_array() const { return {lx, ly, theta, scale, aspect, skew}; }

    static AffineState from_array(const std::array<double, kDims>& v)
    {
        return {v[0], v[1], v[2], v[3], v[4], v[5]};
    }

    /// Linear part as row-major 2×2 {a, b, c, d}: [x; y] = [a b; c d]·[u; v].
    std::array<double, 4> linear() const
    {
        const double ct = std::cos(theta);
        const double st = std::sin(theta);
        // R(θ) · [[1, φ], [0, α]] then scaled by s.
        return {scale * ct, scale * (ct * skew - st * aspect), scale * st,
                scale * (st * skew + ct * aspect)};
    }

    /// |det| of the linear part times the template area.
    double warped_area(Size2 box) const
    {
        const auto l = linear();
        return std::abs(l[0] * l[3] - l[1] * l[2]) * box.w * box.h;
    }

    bool valid(Size2 box) const
    {
        return scale > 0.0 && aspect > 0.0 && std::isfinite(lx) && std::isfinite(ly) &&
               warped_area(box) >= 4.0;
    }

    friend bool operator==(const AffineState&, const AffineState&) = default;
};

/// Identity-warp state centered on `box`.
inline AffineState state_from_box(const BoundingBox& box)
{
    return {box.center_x(), box.center_y(), 0.0, 1.0, 1.0, 0.0};
}

/// Axis-aligned envelope of the warped template box.
inline BoundingBox envelope(const AffineState& state, Size2 box)
{
    const auto l = state.linear();
    double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
    bool first = true;
    for (const double u : {-0.5 * box.w, 0.5 * box.w}) {
        for (const double v : {-0.5 * box.h, 0.5 * box.h}) {
            const double x = l[0] * u + l[1] * v;
            const double y = l[2] * u + l[3] * v;
            if (first) {
                min_x = max_x = x;
                min_y = max_y = y;
                first = false;
            } else {
                min_x = std::min(min_x, x);
                max_x = std::max(max_x, x);
                min_y = std::min(min_y, y);
                max_y = std::max(max_y, y);
            }
        }
    }
    return {state.lx + min_x, state.ly + min_y, max_x - min_x, max_y - min_y};
}

} // namespace llctrack
