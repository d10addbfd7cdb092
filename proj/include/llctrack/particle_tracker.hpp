#pragma once

#include <llctrack/encoder.hpp>
#include <llctrack/error.hpp>
#include <llctrack/geometry.hpp>
#include <llctrack/imaging.hpp>
#include <llctrack/templates.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace llctrack {

/// SplitMix64 finalizer, used to derive independent stream seeds.
inline constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0)
{
    auto step = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return step(step(step(seed) ^ a) ^ b);
}

/// Counter-based generator; one stream per particle keeps draws independent
/// of evaluation order.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Per-field standard deviations of the Gaussian random walk, ordered as
/// [lx, ly, θ, s, α, φ].
struct MotionModel {
    std::array<double, AffineState::kDims> sigmas{4.0, 4.0, 0.01, 0.01, 0.002, 0.001};

    void validate() const
    {
        for (const double s : sigmas) {
            if (!(s >= 0.0) || !std::isfinite(s)) {
                throw Error(ErrorCode::InvalidArgument, "motion sigmas must be finite and >= 0");
            }
        }
    }
};

/// Draws n states around `prev`. Invalid draws are retried up to 100 times
/// and then clamped back to a valid state.
inline std::vector<AffineState> propagate(const AffineState& prev, const MotionModel& model,
                                          int n_particles, std::uint64_t seed,
                                          Size2 template_box = {32.0, 32.0})
{
    model.validate();
    if (n_particles < 1) throw Error(ErrorCode::InvalidArgument, "n_particles must be >= 1");
    const auto base = prev.as_array();
    std::vector<AffineState> out;
    out.reserve(static_cast<std::size_t>(n_particles));
    for (int i = 0; i < n_particles; ++i) {
        SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        std::normal_distribution<double> normal(0.0, 1.0);
        AffineState state;
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            auto v = base;
            for (std::size_t d = 0; d < v.size(); ++d) {
                if (model.sigmas[d] > 0.0) v[d] += model.sigmas[d] * normal(rng);
            }
            state = AffineState::from_array(v);
            ok = state.valid(template_box);
        }
        if (!ok) {
            state.scale = std::max(state.scale, prev.scale > 0.0 ? prev.scale : 1.0);
            state.aspect = std::max(state.aspect, prev.aspect > 0.0 ? prev.aspect : 1.0);
            if (!state.valid(template_box)) state = prev;
        }
        out.push_back(state);
    }
    return out;
}

/// exp(−α(ε_pos − ε_neg)): large when positives explain the candidate better
/// than negatives do.
inline double confidence(double pos_error, double neg_error, double alpha_norm = 2.5)
{
    return std::exp(-alpha_norm * (pos_error - neg_error));
}

/// Number of negative-template coefficients strictly above the threshold.
inline int count_negatives_used(const UniformCoefficients& combined, double use_threshold = 1e-3)
{
    if (!(use_threshold > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "use threshold must be > 0");
    }
    const auto neg = combined.neg_part();
    return static_cast<int>((neg.array() > use_threshold).count());
}

struct TrackerConfig {
    TemplateConfig templates;
    EncoderConfig encoder;
    MotionModel motion;
    int particles = 600;
    double alpha = 2.5;
    double use_threshold = 1e-3;
    /// LEN(neg*) at or above this count flags severe occlusion.
    int occlusion_min_negatives = 2;
    /// Worker threads for particle scoring; 0 picks LLCTRACK_THREADS or the
    /// hardware concurrency.
    int threads = 0;
    std::uint64_t seed = 0;

    void validate() const
    {
        encoder.validate();
        motion.validate();
        if (particles < 1) throw Error(ErrorCode::InvalidArgument, "particles must be >= 1");
        if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be > 0");
        if (!(use_threshold > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "use_threshold must be > 0");
        }
        if (templates.positives < 1 || templates.positives > templates.max_positives) {
            throw Error(ErrorCode::InvalidArgument, "need 1 <= positives <= max_positives");
        }
        if (templates.negatives < 0 || templates.update_interval < 1) {
            throw Error(ErrorCode::InvalidArgument, "invalid negatives or update interval");
        }
        if (encoder.neighbor_counts.back() > templates.positives + templates.negatives) {
            throw Error(ErrorCode::InvalidArgument, "largest neighbor count exceeds p + n");
        }
        if (!(templates.inner_factor >= 0.0) ||
            !(templates.inner_factor < templates.outer_factor)) {
            throw Error(ErrorCode::InvalidArgument, "radii factors must satisfy 0 <= r < s");
        }
    }
};

struct FrameResult {
    AffineState state;
    BoundingBox box;
    double confidence = 1.0;
    double pos_error = 0.0;
    double neg_error = 0.0;
    int neg_used = 0;
    bool occluded = false;
    bool positives_updated = false;
};

inline int resolve_threads(int requested)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("LLCTRACK_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const auto hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

struct CandidateScore {
    double confidence = 0.0;
    double pos_error = 0.0;
    double neg_error = 0.0;
    int neg_used = 0;
    bool valid = false;
};

/// Encodes one candidate against the store and scores it.
inline CandidateScore score_candidate(const PatchVector& patch, const TemplateStore& store,
                                      const TrackerConfig& config)
{
    const auto enc = encode(patch, store, config.encoder);
    const auto err = reconstruction_errors(patch, store, enc.combined);
    return {confidence(err.pos_error, err.neg_error, config.alpha), err.pos_error, err.neg_error,
            count_negatives_used(enc.combined, config.use_threshold), true};
}

/**
 * Scores every state in parallel over a read-only store. States whose patch
 * cannot be extracted get `valid == false`.
 */
inline std::vector<CandidateScore> score_particles(const GrayImage& frame,
                                                   const std::vector<AffineState>& states,
                                                   Size2 template_box, const TemplateStore& store,
                                                   const TrackerConfig& config)
{
    std::vector<CandidateScore> scores(states.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                scores[i] = score_candidate(extract_patch(frame, states[i], template_box), store,
                                            config);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegenerateWarp && e.code() != ErrorCode::ZeroPatch) {
                    throw;
                }
            }
        }
    };
    const auto n = states.size();
    const auto threads = static_cast<std::size_t>(
        std::clamp<int>(resolve_threads(config.threads), 1, static_cast<int>(std::max<std::size_t>(n, 1))));
    if (threads <= 1) {
        work(0, n);
        return scores;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = n * t / threads;
            const std::size_t end = n * (t + 1) / threads;
            pool.emplace_back([&, t, begin, end] {
                try {
                    work(begin, end);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return scores;
}

/// Index of the highest-confidence valid candidate; ties go to the lower index.
inline std::optional<std::size_t> select_best(const std::vector<CandidateScore>& scores)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!scores[i].valid) continue;
        if (!best || scores[i].confidence > scores[*best].confidence) best = i;
    }
    return best;
}

/**
 * One tracking step: propagate around the previous state, score every
 * particle, keep the best one, flag occlusion and maintain the templates.
 */
inline FrameResult track_frame(const GrayImage& frame, const FrameResult& prev,
                               TemplateStore& store, Size2 template_box,
                               const TrackerConfig& config, int frame_index)
{
    const auto states =
        propagate(prev.state, config.motion, config.particles,
                  mix_seed(config.seed, static_cast<std::uint64_t>(frame_index), 1), template_box);
    const auto scores = score_particles(frame, states, template_box, store, config);
    const auto best = select_best(scores);
    if (!best) {
        throw Error(ErrorCode::AllParticlesDegenerate,
                    "no particle produced a usable patch in frame " + std::to_string(frame_index));
    }
    const auto& win = scores[*best];
    FrameResult result;
    result.state = states[*best];
    result.box = envelope(result.state, template_box);
    result.confidence = win.confidence;
    result.pos_error = win.pos_error;
    result.neg_error = win.neg_error;
    result.neg_used = win.neg_used;
    result.occluded = win.neg_used >= config.occlusion_min_negatives;

    const auto patch = extract_patch(frame, result.state, template_box);
    const auto outcome = update_stores(
        store, patch, result.pos_error, result.occluded, frame_index, frame, result.state,
        template_box, config.templates, mix_seed(config.seed, static_cast<std::uint64_t>(frame_index), 2));
    result.positives_updated = outcome.positive_added;
    return result;
}

/// Stateful driver over a frame sequence. Frame indices are 1-based.
class Tracker {
public:
    explicit Tracker(TrackerConfig config) : config_(std::move(config)) { config_.validate(); }

    FrameResult initialize(const GrayImage& frame, const BoundingBox& box)
    {
        store_ = init_stores(frame, box, config_.templates, mix_seed(config_.seed, 0, 0));
        template_box_ = {box.w, box.h};
        frame_index_ = 1;
        const AffineState state = state_from_box(box);
        const auto score =
            score_candidate(extract_patch(frame, state, template_box_), store_, config_);
        last_ = FrameResult{state,          box, score.confidence, score.pos_error,
                            score.neg_error, score.neg_used,
                            score.neg_used >= config_.occlusion_min_negatives, false};
        return last_;
    }

    FrameResult track(const GrayImage& frame)
    {
        if (frame_index_ < 1) {
            throw Error(ErrorCode::InvalidArgument, "tracker is not initialized");
        }
        ++frame_index_;
        last_ = track_frame(frame, last_, store_, template_box_, config_, frame_index_);
        return last_;
    }

    const TemplateStore& store() const { return store_; }
    const TrackerConfig& config() const { return config_; }
    Size2 template_box() const { return template_box_; }
    int frame_index() const { return frame_index_; }

private:
    TrackerConfig config_;
    TemplateStore store_;
    Size2 template_box_;
    FrameResult last_;
    int frame_index_ = 0;
};

} // namespace llctrack
