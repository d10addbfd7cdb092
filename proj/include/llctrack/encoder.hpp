#pragma once

#include <llctrack/error.hpp>
#include <llctrack/imaging.hpp>
#include <llctrack/llc_solver.hpp>
#include <llctrack/templates.hpp>

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace llctrack {

struct EncoderConfig {
    std::vector<Eigen::Index> neighbor_counts{5, 8, 10};
    double lambda = 1.0;
    double beta = 0.1;
    int iterations = 3;

    void validate() const
    {
        if (neighbor_counts.empty()) {
            throw Error(ErrorCode::InvalidArgument, "at least one neighbor count is required");
        }
        for (std::size_t j = 0; j < neighbor_counts.size(); ++j) {
            if (neighbor_counts[j] < 1) {
                throw Error(ErrorCode::InvalidArgument, "neighbor counts must be >= 1");
            }
            if (j > 0 && neighbor_counts[j] <= neighbor_counts[j - 1]) {
                throw Error(ErrorCode::InvalidArgument, "neighbor counts must be strictly increasing");
            }
        }
        if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
        if (!(lambda >= 0.0) || !(beta >= 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "lambda and beta must be >= 0");
        }
    }
};

struct EncodingResult {
    std::vector<UniformCoefficients> per_dictionary;
    Vector weights;
    UniformCoefficients combined;
    /// Column j is B^j c^j, the reconstruction from dictionary j.
    Matrix reconstructions;
};

/**
 * Learns convex-combination weights for the per-dictionary reconstructions
 * by the β-regularized sum-to-one coder, alternating `iterations` times.
 *
 * The reconstructions do not change between iterations, so every pass solves
 * the same system; the loop is kept to mirror the alternating scheme.
 */
inline Vector learn_weights(const Vector& query, const Matrix& reconstructions, double beta,
                            int iterations, std::vector<Vector>* trace = nullptr)
{
    const auto m = reconstructions.cols();
    Vector w = Vector::Constant(m, 1.0 / static_cast<double>(m));
    const CodingProblem problem{query, reconstructions, beta};
    const Matrix gram = shifted_gram(problem);
    for (int t = 0; t < iterations; ++t) {
        w = solve_shifted_gram(gram, beta);
        if (trace) trace->push_back(w);
    }
    return w;
}

/// Σ_j w_j d^j.
inline UniformCoefficients combine(const std::vector<UniformCoefficients>& parts,
                                   const Vector& weights)
{
    UniformCoefficients out{Vector::Zero(parts.front().values.size()),
                            parts.front().positive_count};
    for (std::size_t j = 0; j < parts.size(); ++j) {
        out.values += weights(static_cast<Eigen::Index>(j)) * parts[j].values;
    }
    return out;
}

/**
 * Encodes a candidate against one local dictionary per neighbor count and
 * merges the uniform coefficient vectors with learned weights.
 *
 * The shifted Gram matrix of each local dictionary is assembled from the
 * store's cached template Gram matrix:
 * (AᵀA)_ab = ⟨t_a, t_b⟩ − ⟨t_a, y⟩ − ⟨t_b, y⟩ + ‖y‖².
 */
inline EncodingResult encode(const PatchVector& query, const TemplateStore& store,
                             const EncoderConfig& config)
{
    config.validate();
    const Vector& y = query.values();
    const auto largest = config.neighbor_counts.back();
    if (largest > store.size()) {
        throw Error(ErrorCode::KTooLarge, "largest neighbor count exceeds store size");
    }

    const Vector dots = store.atoms().transpose() * y;
    const double y_sq = y.squaredNorm();
    // KNN sets for smaller k are prefixes of the largest one.
    const auto ranked = nearest_templates(store, dots, y_sq, largest);

    const auto m = static_cast<Eigen::Index>(config.neighbor_counts.size());
    EncodingResult result;
    result.per_dictionary.reserve(static_cast<std::size_t>(m));
    result.reconstructions.resize(y.size(), m);

    for (Eigen::Index j = 0; j < m; ++j) {
        const auto k = config.neighbor_counts[static_cast<std::size_t>(j)];
        const std::vector<Eigen::Index> chosen(ranked.begin(), ranked.begin() + k);
        Matrix gram(k, k);
        for (Eigen::Index a = 0; a < k; ++a) {
            const auto ua = chosen[static_cast<std::size_t>(a)];
            for (Eigen::Index b = a; b < k; ++b) {
                const auto ub = chosen[static_cast<std::size_t>(b)];
                const double v = store.gram()(ua, ub) - dots(ua) - dots(ub) + y_sq;
                gram(a, b) = v;
                gram(b, a) = v;
            }
        }
        const Vector c = solve_shifted_gram(gram, config.lambda);

        std::vector<Eigen::Index> indicator(chosen.size());
        auto recon = result.reconstructions.col(j);
        recon.setZero();
        for (Eigen::Index a = 0; a < k; ++a) {
            const auto u = chosen[static_cast<std::size_t>(a)];
            indicator[static_cast<std::size_t>(a)] = u + 1;
            recon.noalias() += c(a) * store.atoms().col(u);
        }
        result.per_dictionary.push_back(
            scatter(c, indicator, store.size(), store.positive_count()));
    }

    result.weights = learn_weights(y, result.reconstructions, config.beta, config.iterations);
    result.combined = combine(result.per_dictionary, result.weights);
    return result;
}

struct ReconstructionErrors {
    double pos_error = 0.0;
    double neg_error = 0.0;
};

/// ‖y − T_pos·d_pos‖² and ‖y − T_neg·d_neg‖², skipping zero coefficients.
inline ReconstructionErrors reconstruction_errors(const PatchVector& query,
                                                  const TemplateStore& store,
                                                  const UniformCoefficients& combined)
{
    if (combined.values.size() != store.size() ||
        combined.positive_count != store.positive_count()) {
        throw Error(ErrorCode::InvalidArgument, "coefficient vector does not match the store");
    }
    const Vector& y = query.values();
    Vector pos = y;
    Vector neg = y;
    for (Eigen::Index i = 0; i < store.size(); ++i) {
        const double d = combined.values(i);
        if (d == 0.0) continue;
        if (i < store.positive_count()) {
            pos.noalias() -= d * store.atoms().col(i);
        } else {
            neg.noalias() -= d * store.atoms().col(i);
        }
    }
    return {pos.squaredNorm(), neg.squaredNorm()};
}

} // namespace llctrack
