#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace llctrack;
using testing_support::kkt_oracle;
using testing_support::counterexample;
using testing_support::random_problem;
using testing_support::random_sdd;

namespace {

/// Uniform point on the probability simplex.
Vector simplex_point(std::mt19937_64& rng, Eigen::Index k)
{
    std::exponential_distribution<double> e(1.0);
    Vector v(k);
    for (Eigen::Index i = 0; i < k; ++i) v(i) = e(rng);
    return v / v.sum();
}

} // namespace

TEST(SolveSumToOne, SingleAtomGetsUnitWeight)
{
    std::mt19937_64 rng(1);
    const auto p = random_problem(rng, 16, 1);
    const auto s = solve_sum_to_one(p);
    ASSERT_EQ(s.coefficients.size(), 1);
    EXPECT_DOUBLE_EQ(s.coefficients(0), 1.0);
}

TEST(SolveSumToOne, QueryInDictionaryIsReproduced)
{
    std::mt19937_64 rng(2);
    auto p = random_problem(rng, 8, 3);
    p.query = p.basis.col(1);
    const auto s = solve_sum_to_one(p);
    EXPECT_LE(s.residual, 1e-9);
    EXPECT_NEAR(s.coefficients.sum(), 1.0, 1e-10);
}

TEST(SolveSumToOne, MatchesBorderedKktSystem)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_problem(rng, 8, 3);
        const auto s = solve_sum_to_one(p);
        const Vector oracle = kkt_oracle(p);
        EXPECT_LE((s.coefficients - oracle).lpNorm<Eigen::Infinity>(), 1e-8) << "trial " << trial;
    }
}

TEST(SolveSumToOne, CoefficientsSumToOneAndGramIsSymmetric)
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index k = 1 + trial % 10;
        const auto p = random_problem(rng, 32, k, 0.0, trial % 2 == 0);
        const auto s = solve_sum_to_one(p);
        EXPECT_NEAR(s.coefficients.sum(), 1.0, 1e-10);
        EXPECT_GE(s.residual, 0.0);
        EXPECT_LE((s.gram_shifted - s.gram_shifted.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SolveSumToOne, RejectsPositiveLambdaAndBadShapes)
{
    std::mt19937_64 rng(5);
    auto p = random_problem(rng, 8, 3, 0.5);
    EXPECT_THROW(solve_sum_to_one(p), Error);
    p.lambda = 0.0;
    p.query = Vector::Ones(7);
    try {
        solve_sum_to_one(p);
        FAIL() << "expected InvalidArgument";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
    CodingProblem wide{Vector::Ones(2), Matrix::Ones(2, 3), 0.0};
    EXPECT_THROW(solve_sum_to_one(wide), Error);
}

TEST(SolveSumToOne, NonFiniteDictionaryIsSingular)
{
    std::mt19937_64 rng(6);
    auto p = random_problem(rng, 8, 3);
    p.basis(0, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
        solve_sum_to_one(p);
        FAIL() << "expected SingularSystem";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SingularSystem);
    }
}

TEST(SolveRegularized, HugeLambdaAverages)
{
    std::mt19937_64 rng(7);
    const auto p = random_problem(rng, 64, 5, 1e9);
    const auto s = solve_regularized(p);
    for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(s.coefficients(j), 0.2, 1e-4);
}

TEST(SolveRegularized, GramShiftedIncludesLambda)
{
    std::mt19937_64 rng(8);
    const auto p = random_problem(rng, 16, 4, 0.7);
    const auto s = solve_regularized(p);
    const Matrix a = p.basis.colwise() - p.query;
    const Matrix expected = a.transpose() * a + 0.7 * Matrix::Identity(4, 4);
    EXPECT_LE((s.gram_shifted - expected).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((s.coefficients - kkt_oracle(p)).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(SolveRegularized, LowerBoundLambdaMatchesNonnegativeOracle)
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        auto p = random_problem(rng, 64, 2 + trial % 7, 0.0, true);
        p.lambda = lambda_lower_bound(shifted_gram(p));
        const auto s = solve_regularized(p);
        ASSERT_GE(s.coefficients.minCoeff(), -1e-12) << "trial " << trial;
        const auto oracle = solve_nonneg_oracle(p);
        EXPECT_LE((s.coefficients - oracle.coefficients).lpNorm<Eigen::Infinity>(), 1e-6);
        EXPECT_NEAR(coding_objective(p, s.coefficients), coding_objective(p, oracle.coefficients),
                    1e-6);
    }
}

TEST(SolveRegularized, SmallLambdaKeepsNegativeCoefficient)
{
    std::mt19937_64 rng(10);
    int found = 0;
    for (int trial = 0; trial < 2000 && found < 5; ++trial) {
        auto p = random_problem(rng, 16, 5);
        if (solve_sum_to_one(p).coefficients.minCoeff() >= -0.05) continue;
        p.lambda = 0.01;
        EXPECT_LT(solve_regularized(p).coefficients.minCoeff(), 0.0) << "trial " << trial;
        ++found;
    }
    EXPECT_EQ(found, 5);
}

TEST(Solve, DispatchesOnLambda)
{
    std::mt19937_64 rng(11);
    auto p = random_problem(rng, 16, 4);
    EXPECT_EQ(solve(p).coefficients, solve_sum_to_one(p).coefficients);
    p.lambda = 0.3;
    EXPECT_EQ(solve(p).coefficients, solve_regularized(p).coefficients);
}

TEST(NonnegOracle, SingleAtomAndExactColumn)
{
    std::mt19937_64 rng(12);
    auto p1 = random_problem(rng, 8, 1);
    EXPECT_DOUBLE_EQ(solve_nonneg_oracle(p1).coefficients(0), 1.0);

    auto p = random_problem(rng, 8, 4, 0.0, true);
    p.query = p.basis.col(2);
    const auto s = solve_nonneg_oracle(p);
    Vector e3 = Vector::Zero(4);
    e3(2) = 1.0;
    EXPECT_LE((s.coefficients - e3).lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_LE(s.residual, 1e-20);
}

TEST(NonnegOracle, DominatesRandomSimplexPoints)
{
    std::mt19937_64 rng(13);
    const auto p = random_problem(rng, 8, 4);
    const auto s = solve_nonneg_oracle(p);
    EXPECT_GE(s.coefficients.minCoeff(), 0.0);
    EXPECT_NEAR(s.coefficients.sum(), 1.0, 1e-12);
    const double best = coding_objective(p, s.coefficients);
    for (int i = 0; i < 10000; ++i) {
        ASSERT_LE(best, coding_objective(p, simplex_point(rng, 4)) + 1e-12) << "sample " << i;
    }
}

TEST(NonnegOracle, ZeroOutsideSupportAndActiveSetReported)
{
    std::mt19937_64 rng(14);
    int with_active = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_problem(rng, 8, 6);
        const auto s = solve_nonneg_oracle(p);
        const auto active = active_set(s.coefficients);
        for (const auto j : active) EXPECT_EQ(s.coefficients(j), 0.0);
        if (!active.empty()) ++with_active;
    }
    EXPECT_GT(with_active, 0);
}

TEST(NonnegOracle, RejectsLargeK)
{
    std::mt19937_64 rng(15);
    const auto p = random_problem(rng, 32, 13);
    try {
        solve_nonneg_oracle(p);
        FAIL() << "expected OracleTooLarge";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OracleTooLarge);
    }
}

TEST(LambdaLowerBound, ZeroGramGivesEpsilon)
{
    EXPECT_DOUBLE_EQ(lambda_lower_bound(Matrix::Zero(4, 4), 1e-6), 1e-6);
    EXPECT_DOUBLE_EQ(lambda_lower_bound(Matrix::Zero(4, 4)), kLambdaEpsilon);
}

TEST(LambdaLowerBound, ShiftMakesGramDiagonallyDominant)
{
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 300; ++trial) {
        const auto p = random_problem(rng, 24, 2 + trial % 11, 0.0, trial % 2 == 0);
        Matrix g = shifted_gram(p);
        const double bound = lambda_lower_bound(g);
        g.diagonal().array() += bound;
        EXPECT_TRUE(is_strictly_diagonally_dominant(g)) << "trial " << trial;
    }
}

TEST(LambdaLowerBound, OracleEquivalenceWhenNonnegative)
{
    std::mt19937_64 rng(17);
    int compared = 0;
    for (int trial = 0; trial < 200; ++trial) {
        auto p = random_problem(rng, 32, 2 + trial % 7, 0.0, trial % 3 != 0);
        p.lambda = lambda_lower_bound(shifted_gram(p));
        const auto s = solve_regularized(p);
        if (s.coefficients.minCoeff() < 0.0) continue;
        ++compared;
        const auto oracle = solve_nonneg_oracle(p);
        EXPECT_NEAR(coding_objective(p, s.coefficients), coding_objective(p, oracle.coefficients),
                    1e-6);
    }
    EXPECT_EQ(compared, 200);
}

TEST(DominanceReport, DiagonalMatrixBoundsCollapse)
{
    Matrix f = Vector(Eigen::Vector3d(2.0, 4.0, 8.0)).asDiagonal();
    const auto r = dominance_report(f);
    EXPECT_TRUE(r.is_sdd);
    for (int j = 0; j < 3; ++j) {
        EXPECT_EQ(r.mu(j), 0.0);
        EXPECT_DOUBLE_EQ(r.diag_bounds[static_cast<std::size_t>(j)].first, 1.0 / f(j, j));
        EXPECT_DOUBLE_EQ(r.diag_bounds[static_cast<std::size_t>(j)].second, 1.0 / f(j, j));
    }
}

TEST(DominanceReport, CounterexampleMatrix)
{
    const Matrix f = counterexample();
    const auto r = dominance_report(f);
    EXPECT_TRUE(r.is_sdd);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(r.mu(j), 0.8, 1e-15);
    const Matrix inv = f.inverse();
    EXPECT_NEAR(inv(0, 0), 0.43, 0.005);
    EXPECT_GE(inv(0, 0), r.diag_bounds[0].first);
    EXPECT_LE(inv(0, 0), r.diag_bounds[0].second);
    EXPECT_NEAR(r.diag_bounds[0].first, 1.0 / 9.0, 1e-15);
    EXPECT_NEAR(r.diag_bounds[0].second, 1.0, 1e-12);

    EXPECT_TRUE(is_strictly_diagonally_dominant(f));
    EXPECT_FALSE(is_strictly_diagonally_dominant(inv));
    Matrix printed(3, 3);
    printed << 0.43, -0.29, 0.29, -0.29, 0.43, -0.29, 0.29, -0.29, 0.43;
    EXPECT_LE((inv - printed).cwiseAbs().maxCoeff(), 0.005);
}

TEST(DominanceReport, NonDominantRowHasInfiniteUpperBound)
{
    Matrix f(2, 2);
    f << 1, 2, 2, 5;
    const auto r = dominance_report(f);
    EXPECT_FALSE(r.is_sdd);
    EXPECT_DOUBLE_EQ(r.mu(0), 2.0);
    EXPECT_TRUE(std::isinf(r.diag_bounds[0].second));
    EXPECT_LE(r.diag_bounds[0].first, r.diag_bounds[0].second);
}

TEST(DominanceReport, ZeroDiagonalIsRejected)
{
    Matrix f(2, 2);
    f << 0, 1, 1, 3;
    try {
        dominance_report(f);
        FAIL() << "expected ZeroDiagonal";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroDiagonal);
    }
}

TEST(DominanceReport, OstrowskiContainment)
{
    std::mt19937_64 rng(18);
    int violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Eigen::Index k = 1 + trial % 10;
        const Matrix f = random_sdd(rng, k);
        const auto r = dominance_report(f);
        ASSERT_TRUE(r.is_sdd);
        const Matrix inv = f.inverse();
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto [lo, hi] = r.diag_bounds[static_cast<std::size_t>(j)];
            if (inv(j, j) < lo * (1 - 1e-12) || inv(j, j) > hi * (1 + 1e-12)) ++violations;
        }
    }
    EXPECT_EQ(violations, 0);
}

TEST(NonnegativityCertificate, Identity)
{
    EXPECT_TRUE(nonnegativity_certificate(Matrix::Identity(5, 5)));
}

TEST(NonnegativityCertificate, CounterexampleIsWithheld)
{
    const Matrix f = counterexample();
    EXPECT_FALSE(nonnegativity_certificate(f));
    const Vector c = f.inverse() * Vector::Ones(3);
    EXPECT_NEAR(c(0), 0.43, 0.005);
    EXPECT_NEAR(c(1), -0.15, 0.01);
    EXPECT_NEAR(c(2), 0.43, 0.005);
    EXPECT_LT(c(1), 0.0);
}

TEST(NonnegativityCertificate, LargeLambdaOnImageData)
{
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_problem(rng, 64, 3 + trial % 8, 0.0, true);
        Matrix f = shifted_gram(p);
        f.diagonal().array() += 100.0 * lambda_lower_bound(f);
        EXPECT_TRUE(nonnegativity_certificate(f)) << "trial " << trial;
        // A certificate implies F⁻¹1 > 0.
        EXPECT_GT((f.llt().solve(Vector::Ones(f.rows()))).minCoeff(), 0.0);
    }
}

TEST(NonnegativityCertificate, RejectsIndefiniteAndAsymmetric)
{
    Matrix indefinite(2, 2);
    indefinite << 1, 3, 3, 1;
    Matrix asymmetric(2, 2);
    asymmetric << 2, 1, 0, 2;
    for (const Matrix& f : {indefinite, asymmetric}) {
        try {
            nonnegativity_certificate(f);
            FAIL() << "expected NotPositiveDefinite";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
        }
    }
}

TEST(AveragingLaw, DeviationFromUniformShrinksWithLambda)
{
    std::mt19937_64 rng(20);
    const double lambdas[] = {1, 10, 100, 1e4, 1e6};
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index k = 2 + trial % 9;
        auto p = random_problem(rng, 64, k, 1.0, trial % 2 == 0);
        double previous = std::numeric_limits<double>::infinity();
        for (const double lambda : lambdas) {
            p.lambda = lambda;
            const auto c = solve_regularized(p).coefficients;
            const double dev = (c.array() - 1.0 / static_cast<double>(k)).abs().maxCoeff();
            EXPECT_LE(dev, previous + 1e-9) << "trial " << trial << " lambda " << lambda;
            previous = dev;
        }
        EXPECT_LE(previous, 1e-3);
    }
}

TEST(SignPreservation, PositiveSolveStaysPositiveAfterRescaling)
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        auto p = random_problem(rng, 32, 2 + trial % 8, 0.05 * (trial % 5), true);
        Matrix f = shifted_gram(p);
        f.diagonal().array() += p.lambda > 0 ? p.lambda : kSolveJitter;
        const Vector raw = f.llt().solve(Vector::Ones(f.rows()));
        if (raw.minCoeff() <= 0.0) continue;
        EXPECT_GT(solve(p).coefficients.minCoeff(), 0.0);
    }
}
