#pragma once

#include <llctrack/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace llctrack {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Diagonal jitter added to the shifted Gram matrix before an unregularized
/// solve. Coefficients from `solve_sum_to_one` are exact for AᵀA + 1e-12·I.
inline constexpr double kSolveJitter = 1e-12;

/// Default ε added on top of the off-diagonal row-sum bound.
inline constexpr double kLambdaEpsilon = 1e-6;

/// Largest K the exhaustive nonnegative oracle accepts (2^12 supports).
inline constexpr std::size_t kOracleMaxK = 12;

/**
 * Approximated locality-constrained coding problem:
 *
 *     min ‖query − basis·c‖² + lambda·‖c‖²   s.t. 1ᵀc = 1
 *
 * Columns of `basis` and `query` are expected to be unit-norm; the solver
 * never renormalizes them.
 */
struct CodingProblem {
    Vector query;
    Matrix basis;
    double lambda = 0.0;
};

struct CodingSolution {
    Vector coefficients;
    /// ‖query − basis·coefficients‖².
    double residual = 0.0;
    /// F = AᵀA + λI with A = basis − query·1ᵀ. For λ = 0 this is AᵀA
    /// without the solve jitter.
    Matrix gram_shifted;
};

struct DominanceReport {
    bool is_sdd = false;
    Vector mu;
    /// (lower, upper) bounds on (F⁻¹)_jj; upper is +∞ when mu_j ≥ 1.
    std::vector<std::pair<double, double>> diag_bounds;
};

namespace detail {

inline void validate(const CodingProblem& problem)
{
    const auto m = problem.basis.rows();
    const auto k = problem.basis.cols();
    if (k < 1 || k > m) {
        throw Error(ErrorCode::InvalidArgument, "basis must satisfy 1 <= K <= M");
    }
    if (problem.query.size() != m) {
        throw Error(ErrorCode::InvalidArgument, "query length must equal basis rows");
    }
    if (!(problem.lambda >= 0.0) || !std::isfinite(problem.lambda)) {
        throw Error(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
    }
}

} // namespace detail

/// AᵀA for A = basis − query·1ᵀ.
inline Matrix shifted_gram(const CodingProblem& problem)
{
    detail::validate(problem);
    const Matrix a = problem.basis.colwise() - problem.query;
    Matrix gram = a.transpose() * a;
    // Force exact symmetry; the product is symmetric only up to rounding.
    return (0.5 * (gram + gram.transpose())).eval();
}

/**
 * Solves (AᵀA + λI)c = 1 and rescales c to sum to one.
 *
 * `gram` is AᵀA. With lambda == 0 the jitter kSolveJitter is added to the
 * diagonal before factorizing.
 */
inline Vector solve_shifted_gram(const Matrix& gram, double lambda)
{
    const auto k = gram.rows();
    if (k < 1 || gram.cols() != k) {
        throw Error(ErrorCode::InvalidArgument, "shifted Gram must be square and nonempty");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
    }
    Matrix f = gram;
    f.diagonal().array() += (lambda > 0.0 ? lambda : kSolveJitter);

    const Eigen::LLT<Matrix> llt(f);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularSystem, "shifted Gram is not positive definite");
    }
    Vector c = llt.solve(Vector::Ones(k));
    const double total = c.sum();
    if (!c.allFinite() || !std::isfinite(total) || total <= 0.0) {
        throw Error(ErrorCode::SingularSystem, "degenerate dictionary, 1ᵀF⁻¹1 is not positive");
    }
    c /= total;
    return c;
}

namespace detail {

inline CodingSolution finish(const CodingProblem& problem, Vector coefficients, Matrix gram)
{
    CodingSolution out;
    out.residual = (problem.query - problem.basis * coefficients).squaredNorm();
    out.coefficients = std::move(coefficients);
    gram.diagonal().array() += problem.lambda;
    out.gram_shifted = std::move(gram);
    return out;
}

} // namespace detail

/// Unregularized approximated LLC (λ must be 0).
inline CodingSolution solve_sum_to_one(const CodingProblem& problem)
{
    detail::validate(problem);
    if (problem.lambda != 0.0) {
        throw Error(ErrorCode::InvalidArgument, "solve_sum_to_one requires lambda == 0");
    }
    Matrix gram = shifted_gram(problem);
    Vector c = solve_shifted_gram(gram, 0.0);
    return detail::finish(problem, std::move(c), std::move(gram));
}

/// ℓ2-regularized approximated LLC (λ > 0).
inline CodingSolution solve_regularized(const CodingProblem& problem)
{
    detail::validate(problem);
    if (!(problem.lambda > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "solve_regularized requires lambda > 0");
    }
    Matrix gram = shifted_gram(problem);
    Vector c = solve_shifted_gram(gram, problem.lambda);
    return detail::finish(problem, std::move(c), std::move(gram));
}

/// Dispatches on lambda: 0 goes to `solve_sum_to_one`, anything else to
/// `solve_regularized`.
inline CodingSolution solve(const CodingProblem& problem)
{
    return problem.lambda == 0.0 ? solve_sum_to_one(problem) : solve_regularized(problem);
}

/// ‖y − Bc‖² + λ‖c‖².
inline double coding_objective(const CodingProblem& problem, const Vector& c)
{
    return (problem.query - problem.basis * c).squaredNorm() + problem.lambda * c.squaredNorm();
}

/**
 * Exact solution of
 *
 *     min ‖y − Bc‖² + λ‖c‖²   s.t. c ≥ 0, 1ᵀc = 1
 *
 * by enumerating every support set. Each support is solved as an
 * equality-constrained problem through its bordered KKT system and kept when
 * primal feasible. Coefficients outside the winning support are exactly 0.
 */
inline CodingSolution solve_nonneg_oracle(const CodingProblem& problem)
{
    detail::validate(problem);
    const auto k = static_cast<std::size_t>(problem.basis.cols());
    if (k > kOracleMaxK) {
        throw Error(ErrorCode::OracleTooLarge, "oracle enumerates 2^K supports, K must be <= 12");
    }

    const Matrix gram = problem.basis.transpose() * problem.basis;
    const Vector rhs = problem.basis.transpose() * problem.query;

    Vector best = Vector::Zero(static_cast<Eigen::Index>(k));
    double best_objective = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> support;
    support.reserve(k);

    for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
        support.clear();
        for (std::size_t j = 0; j < k; ++j) {
            if (mask & (std::size_t{1} << j)) support.push_back(static_cast<Eigen::Index>(j));
        }
        const auto s = static_cast<Eigen::Index>(support.size());
        Matrix kkt = Matrix::Zero(s + 1, s + 1);
        Vector b(s + 1);
        for (Eigen::Index a = 0; a < s; ++a) {
            for (Eigen::Index c = 0; c < s; ++c) {
                kkt(a, c) = gram(support[a], support[c]);
            }
            kkt(a, a) += problem.lambda;
            kkt(a, s) = 1.0;
            kkt(s, a) = 1.0;
            b(a) = rhs(support[a]);
        }
        b(s) = 1.0;

        const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt);
        const Vector sol = cod.solve(b);
        if (!sol.allFinite()) continue;
        // Singular supports yield a least-squares point; reject it unless the
        // constraint and stationarity actually hold.
        if ((kkt * sol - b).lpNorm<Eigen::Infinity>() > 1e-9) continue;
        if (sol.head(s).minCoeff() < -1e-12) continue;

        Vector candidate = Vector::Zero(static_cast<Eigen::Index>(k));
        for (Eigen::Index a = 0; a < s; ++a) {
            candidate(support[a]) = std::max(sol(a), 0.0);
        }
        candidate /= candidate.sum();
        const double objective = coding_objective(problem, candidate);
        if (objective < best_objective) {
            best_objective = objective;
            best = candidate;
        }
    }

    Matrix shifted = shifted_gram(problem);
    return detail::finish(problem, std::move(best), std::move(shifted));
}

/// Indices where the oracle's nonnegativity constraint is active (c_j == 0).
inline std::vector<Eigen::Index> active_set(const Vector& coefficients)
{
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < coefficients.size(); ++j) {
        if (coefficients(j) == 0.0) out.push_back(j);
    }
    return out;
}

/// |m_ii| > Σ_{j≠i} |m_ij| for every row.
inline bool is_strictly_diagonally_dominant(const Matrix& m)
{
    if (m.rows() != m.cols()) return false;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double diag = std::abs(m(i, i));
        const double off = m.row(i).cwiseAbs().sum() - diag;
        if (!(diag > off)) return false;
    }
    return true;
}

/**
 * Smallest λ (plus epsilon) that makes AᵀA + λI strictly diagonally
 * dominant: the largest off-diagonal absolute row sum of `gram`.
 */
inline double lambda_lower_bound(const Matrix& gram, double epsilon = kLambdaEpsilon)
{
    if (gram.rows() != gram.cols()) {
        throw Error(ErrorCode::InvalidArgument, "Gram matrix must be square");
    }
    double worst = 0.0;
    for (Eigen::Index j = 0; j < gram.rows(); ++j) {
        worst = std::max(worst, gram.row(j).cwiseAbs().sum() - std::abs(gram(j, j)));
    }
    return worst + epsilon;
}

/// Row ratios μ_i and Ostrowski bounds on the diagonal of F⁻¹.
inline DominanceReport dominance_report(const Matrix& f)
{
    if (f.rows() != f.cols() || f.rows() == 0) {
        throw Error(ErrorCode::InvalidArgument, "matrix must be square and nonempty");
    }
    const auto k = f.rows();
    DominanceReport report;
    report.mu.resize(k);
    report.diag_bounds.reserve(static_cast<std::size_t>(k));
    report.is_sdd = true;
    for (Eigen::Index j = 0; j < k; ++j) {
        const double diag = std::abs(f(j, j));
        if (diag == 0.0) {
            throw Error(ErrorCode::ZeroDiagonal, "diagonal entry is zero");
        }
        const double mu = (f.row(j).cwiseAbs().sum() - diag) / diag;
        report.mu(j) = mu;
        if (!(mu < 1.0)) report.is_sdd = false;
        const double lower = 1.0 / (diag * (1.0 + mu));
        const double upper = mu < 1.0 ? 1.0 / (diag * (1.0 - mu))
                                      : std::numeric_limits<double>::infinity();
        report.diag_bounds.emplace_back(lower, upper);
    }
    return report;
}

/**
 * Sufficient certificate that F⁻¹1 > 0: F⁻¹ is positive definite (because F
 * is) and strictly diagonally dominant. A false result says nothing about
 * the signs of F⁻¹1.
 */
inline bool nonnegativity_certificate(const Matrix& f)
{
    if (f.rows() != f.cols() || f.rows() == 0) {
        throw Error(ErrorCode::InvalidArgument, "matrix must be square and nonempty");
    }
    if (!f.isApprox(f.transpose(), 1e-12)) {
        throw Error(ErrorCode::NotPositiveDefinite, "matrix is not symmetric");
    }
    const Eigen::LLT<Matrix> llt(f);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "Cholesky factorization failed");
    }
    const Matrix inverse = llt.solve(Matrix::Identity(f.rows(), f.cols()));
    return is_strictly_diagonally_dominant(inverse);
}

} // namespace llctrack
