#pragma once

#include <llctrack/error.hpp>
#include <llctrack/geometry.hpp>
#include <llctrack/imaging.hpp>
#include <llctrack/llc_solver.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace llctrack {

struct TemplateConfig {
    int positives = 50;
    int negatives = 150;
    int max_positives = 100;
    /// Disc radius r as a fraction of min(w, h) of the template box.
    double inner_factor = 0.1;
    /// Annulus outer radius s as a fraction of min(w, h).
    double outer_factor = 1.0;
    int update_interval = 5;
    double pos_error_threshold = 0.1;
};

struct TemplateInfo {
    int frame_of_birth = 1;
    /// Center of the sampled patch in image coordinates.
    Point2 center;
};

/**
 * Positive and negative templates stored as columns of one M×(p+n) matrix,
 * positives first. The Gram matrix of all templates is kept in sync so that
 * coding a query only needs one matrix-vector product.
 */
class TemplateStore {
public:
    TemplateStore() = default;

    TemplateStore(Matrix positives, std::vector<TemplateInfo> positive_info, Matrix negatives,
                  std::vector<TemplateInfo> negative_info)
        : positive_count_(positives.cols())
    {
        if (positives.rows() != kPatchLength || negatives.rows() != kPatchLength) {
            throw Error(ErrorCode::InvalidArgument, "templates must have 1024 rows");
        }
        if (positives.cols() < 1) {
            throw Error(ErrorCode::InvalidArgument, "store needs at least one positive template");
        }
        if (static_cast<std::size_t>(positives.cols()) != positive_info.size() ||
            static_cast<std::size_t>(negatives.cols()) != negative_info.size()) {
            throw Error(ErrorCode::InvalidArgument, "template metadata count mismatch");
        }
        atoms_.resize(kPatchLength, positives.cols() + negatives.cols());
        atoms_ << positives, negatives;
        info_ = std::move(positive_info);
        info_.insert(info_.end(), negative_info.begin(), negative_info.end());
        rebuild();
    }

    Eigen::Index positive_count() const { return positive_count_; }
    Eigen::Index negative_count() const { return atoms_.cols() - positive_count_; }
    Eigen::Index size() const { return atoms_.cols(); }

    const Matrix& atoms() const { return atoms_; }
    const Matrix& gram() const { return gram_; }
    auto positives() const { return atoms_.leftCols(positive_count_); }
    auto negatives() const { return atoms_.rightCols(negative_count()); }
    const std::vector<TemplateInfo>& info() const { return info_; }

    void append_positive(const PatchVector& patch, TemplateInfo info)
    {
        Matrix next(kPatchLength, atoms_.cols() + 1);
        next << positives(), patch.values(), negatives();
        atoms_ = std::move(next);
        info_.insert(info_.begin() + positive_count_, info);
        ++positive_count_;
        rebuild();
    }

    void replace_positive(Eigen::Index index, const PatchVector& patch, TemplateInfo info)
    {
        if (index < 0 || index >= positive_count_) {
            throw Error(ErrorCode::IndicatorOutOfRange, "positive template index out of range");
        }
        atoms_.col(index) = patch.values();
        info_[static_cast<std::size_t>(index)] = info;
        rebuild();
    }

    void replace_negatives(const Matrix& negatives, std::vector<TemplateInfo> info)
    {
        if (negatives.rows() != kPatchLength ||
            static_cast<std::size_t>(negatives.cols()) != info.size()) {
            throw Error(ErrorCode::InvalidArgument, "negative templates shape mismatch");
        }
        Matrix next(kPatchLength, positive_count_ + negatives.cols());
        next << positives(), negatives;
        atoms_ = std::move(next);
        info_.resize(static_cast<std::size_t>(positive_count_));
        info_.insert(info_.end(), info.begin(), info.end());
        rebuild();
    }

private:
    void rebuild()
    {
        gram_.noalias() = atoms_.transpose() * atoms_;
        norms_ = gram_.diagonal();
    }

    friend std::vector<Eigen::Index> nearest_templates(const TemplateStore&, const Vector&,
                                                       double, Eigen::Index);

    Eigen::Index positive_count_ = 0;
    Matrix atoms_;
    Matrix gram_;
    Vector norms_;
    std::vector<TemplateInfo> info_;
};

struct LocalDictionary {
    Matrix basis;
    /// 1-based positions over the concatenated [positives, negatives] store.
    std::vector<Eigen::Index> indicator;
    /// Squared Euclidean distance from the query, nondecreasing.
    Vector distances;

    Eigen::Index k() const { return static_cast<Eigen::Index>(indicator.size()); }
};

/// Coefficients over the whole store (d_i), split as [positives, negatives].
struct UniformCoefficients {
    Vector values;
    Eigen::Index positive_count = 0;

    auto pos_part() const { return values.head(positive_count); }
    auto neg_part() const { return values.tail(values.size() - positive_count); }
};

/**
 * Indices (0-based) of the k templates nearest to the query, given the
 * query's dot products with every template. Ties go to the lower index.
 */
inline std::vector<Eigen::Index> nearest_templates(const TemplateStore& store, const Vector& dots,
                                                   double query_sqnorm, Eigen::Index k)
{
    if (k < 1 || k > store.size()) {
        throw Error(ErrorCode::KTooLarge, "k must be within [1, p+n]");
    }
    const auto n = store.size();
    std::vector<std::pair<double, Eigen::Index>> ranked(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = store.norms_(i) - 2.0 * dots(i) + query_sqnorm;
        ranked[static_cast<std::size_t>(i)] = {std::max(d, 0.0), i};
    }
    std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end());
    std::vector<Eigen::Index> out(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) out[static_cast<std::size_t>(j)] = ranked[j].second;
    return out;
}

inline LocalDictionary knn_select(const PatchVector& query, const TemplateStore& store,
                                  Eigen::Index k)
{
    const Vector& y = query.values();
    const Vector dots = store.atoms().transpose() * y;
    const auto nearest = nearest_templates(store, dots, y.squaredNorm(), k);
    LocalDictionary dict;
    dict.basis.resize(kPatchLength, k);
    dict.distances.resize(k);
    dict.indicator.reserve(nearest.size());
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto idx = nearest[static_cast<std::size_t>(j)];
        dict.basis.col(j) = store.atoms().col(idx);
        dict.distances(j) = (store.atoms().col(idx) - y).squaredNorm();
        dict.indicator.push_back(idx + 1);
    }
    return dict;
}

/// values[indicator[j]] = coefficients[j]; everything else is zero.
inline UniformCoefficients scatter(const Vector& coefficients,
                                   const std::vector<Eigen::Index>& indicator,
                                   Eigen::Index store_size, Eigen::Index positive_count)
{
    if (static_cast<std::size_t>(coefficients.size()) != indicator.size()) {
        throw Error(ErrorCode::InvalidArgument, "coefficient count must equal indicator length");
    }
    if (positive_count < 0 || positive_count > store_size) {
        throw Error(ErrorCode::InvalidArgument, "positive count exceeds store size");
    }
    UniformCoefficients out{Vector::Zero(store_size), positive_count};
    std::vector<bool> seen(static_cast<std::size_t>(store_size), false);
    for (std::size_t j = 0; j < indicator.size(); ++j) {
        const auto u = indicator[j];
        if (u < 1 || u > store_size) {
            throw Error(ErrorCode::IndicatorOutOfRange, "indicator entry outside [1, p+n]");
        }
        if (seen[static_cast<std::size_t>(u - 1)]) {
            throw Error(ErrorCode::IndicatorOutOfRange, "indicator entries must be unique");
        }
        seen[static_cast<std::size_t>(u - 1)] = true;
        out.values(u - 1) = coefficients(static_cast<Eigen::Index>(j));
    }
    return out;
}

inline UniformCoefficients scatter(const CodingSolution& solution, const LocalDictionary& dict,
                                   const TemplateStore& store)
{
    return scatter(solution.coefficients, dict.indicator, store.size(), store.positive_count());
}

namespace detail {

inline void validate_init_box(const GrayImage& frame, const BoundingBox& box)
{
    if (!(box.w >= 2.0) || !(box.h >= 2.0)) {
        throw Error(ErrorCode::DegenerateBox, "box width and height must be at least 2 px");
    }
    if (box.x < 0.0) throw Error(ErrorCode::BoxOutOfFrame, "box x < 0");
    if (box.y < 0.0) throw Error(ErrorCode::BoxOutOfFrame, "box y < 0");
    if (box.x + box.w > frame.width()) {
        throw Error(ErrorCode::BoxOutOfFrame, "box x + w = " + std::to_string(box.x + box.w) +
                                                  " exceeds frame width " +
                                                  std::to_string(frame.width()));
    }
    if (box.y + box.h > frame.height()) {
        throw Error(ErrorCode::BoxOutOfFrame, "box y + h = " + std::to_string(box.y + box.h) +
                                                  " exceeds frame height " +
                                                  std::to_string(frame.height()));
    }
}

/// Uniform point in the disc ‖p‖ < r (or the center when r = 0).
inline Point2 sample_disc(std::mt19937_64& rng, double r)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (r <= 0.0) return {0.0, 0.0};
    while (true) {
        const double rho = r * std::sqrt(unit(rng));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        const Point2 p{rho * std::cos(phi), rho * std::sin(phi)};
        if (std::hypot(p.x, p.y) < r) return p;
    }
}

/// Uniform point in the open annulus r < ‖p‖ < s.
inline Point2 sample_annulus(std::mt19937_64& rng, double r, double s)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (true) {
        const double rho = std::sqrt(r * r + unit(rng) * (s * s - r * r));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        const Point2 p{rho * std::cos(phi), rho * std::sin(phi)};
        const double d = std::hypot(p.x, p.y);
        if (d > r && d < s) return p;
    }
}

struct Radii {
    double inner;
    double outer;
};

inline Radii radii_for(const TemplateConfig& config, Size2 box, double scale)
{
    const double side = std::min(box.w, box.h) * scale;
    const Radii radii{config.inner_factor * side, config.outer_factor * side};
    if (!(radii.inner >= 0.0) || !(radii.inner < radii.outer)) {
        throw Error(ErrorCode::InvalidArgument, "sampling radii must satisfy 0 <= r < s");
    }
    return radii;
}

/// Samples `count` patches with centers drawn by `draw`; all-zero patches
/// are redrawn (at most 100 times per patch).
template <class Draw>
Matrix sample_templates(const GrayImage& frame, const AffineState& around, Size2 box, int count,
                        int frame_index, Draw&& draw, std::vector<TemplateInfo>& info)
{
    Matrix out(kPatchLength, count);
    info.clear();
    info.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        for (int attempt = 0;; ++attempt) {
            const Point2 offset = draw();
            AffineState state = around;
            state.lx += offset.x;
            state.ly += offset.y;
            try {
                out.col(i) = extract_patch(frame, state, box).values();
                info.push_back({frame_index, {state.lx, state.ly}});
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::ZeroPatch || attempt >= 100) throw;
            }
        }
    }
    return out;
}

} // namespace detail

/// Samples p positives from the disc of radius r and n negatives from the
/// annulus (r, s) around the initial box. Deterministic given the seed.
inline TemplateStore init_stores(const GrayImage& frame, const BoundingBox& init_box,
                                 const TemplateConfig& config, std::uint64_t seed)
{
    detail::validate_init_box(frame, init_box);
    if (config.positives < 1 || config.negatives < 0 ||
        config.positives > config.max_positives) {
        throw Error(ErrorCode::InvalidArgument, "template counts out of range");
    }
    const Size2 box{init_box.w, init_box.h};
    const AffineState center = state_from_box(init_box);
    const auto radii = detail::radii_for(config, box, 1.0);
    std::mt19937_64 rng(seed);

    std::vector<TemplateInfo> pos_info;
    std::vector<TemplateInfo> neg_info;
    Matrix positives = detail::sample_templates(
        frame, center, box, config.positives, 1,
        [&] { return detail::sample_disc(rng, radii.inner); }, pos_info);
    Matrix negatives = detail::sample_templates(
        frame, center, box, config.negatives, 1,
        [&] { return detail::sample_annulus(rng, radii.inner, radii.outer); }, neg_info);
    return TemplateStore(std::move(positives), std::move(pos_info), std::move(negatives),
                         std::move(neg_info));
}

struct UpdateOutcome {
    bool negatives_refreshed = false;
    bool positive_added = false;
    /// Set when the store was full and a positive was overwritten.
    std::optional<Eigen::Index> replaced;
};

/// Positive template with the smallest Euclidean distance to `patch`.
inline Eigen::Index nearest_positive(const TemplateStore& store, const PatchVector& patch)
{
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < store.positive_count(); ++i) {
        const double d = (store.atoms().col(i) - patch.values()).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

/**
 * Per-frame template maintenance. On every `update_interval`-th frame the
 * negatives are fully resampled around the current state, and the tracked
 * patch joins the positives when the frame is not occluded and its positive
 * reconstruction error is below the threshold. A full positive set replaces
 * its member nearest to the new patch instead of growing.
 */
inline UpdateOutcome update_stores(TemplateStore& store, const PatchVector& tracked_patch,
                                   double pos_error, bool occluded, int frame_index,
                                   const GrayImage& frame, const AffineState& current,
                                   Size2 template_box, const TemplateConfig& config,
                                   std::uint64_t seed)
{
    UpdateOutcome outcome;
    if (config.update_interval < 1 || frame_index % config.update_interval != 0) return outcome;

    const auto radii = detail::radii_for(config, template_box, current.scale);
    std::mt19937_64 rng(seed);
    std::vector<TemplateInfo> neg_info;
    Matrix negatives = detail::sample_templates(
        frame, current, template_box, config.negatives, frame_index,
        [&] { return detail::sample_annulus(rng, radii.inner, radii.outer); }, neg_info);
    store.replace_negatives(negatives, std::move(neg_info));
    outcome.negatives_refreshed = true;

    if (!occluded && pos_error < config.pos_error_threshold) {
        const TemplateInfo info{frame_index, {current.lx, current.ly}};
        if (store.positive_count() < config.max_positives) {
            store.append_positive(tracked_patch, info);
        } else {
            const auto idx = nearest_positive(store, tracked_patch);
            store.replace_positive(idx, tracked_patch, info);
            outcome.replaced = idx;
        }
        outcome.positive_added = true;
    }
    return outcome;
}

} // namespace llctrack
