#include "lsgeom/errors.hpp"
#include "lsgeom/projection.hpp"
#include "lsgeom/solver.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lsgeom;
using lsgeom::testing::gaussian_matrix;
using lsgeom::testing::gaussian_vector;
using lsgeom::testing::orthogonal_matrix;
using lsgeom::testing::soft_threshold;

namespace {

Vector vec(std::initializer_list<double> values)
{
    Vector v(static_cast<Index>(values.size()));
    Index i = 0;
    for (double x : values) v[i++] = x;
    return v;
}

const PenaltySpec kNonnegBeta = PenaltySpec::orthant_cone({ConeSign::nonpositive, ConeSign::nonpositive});

}  // namespace

TEST(Solve, SoftThresholdsAnIdentityDesign)
{
    const RegressionProblem problem(Matrix::Identity(2, 2), vec({2, 0.5}));
    const Solution s = solve(problem, PenaltySpec::unit_box(2), 1.0);
    ASSERT_TRUE(s.converged());
    EXPECT_NEAR(s.beta_hat[0], 1.0, 1e-10);
    EXPECT_NEAR(s.beta_hat[1], 0.0, 1e-10);
    EXPECT_LE(s.duality_gap, 1e-10);
    EXPECT_NEAR(s.lambda, 1.0, 0.0);
}

TEST(Solve, LambdaZeroSolvesTheNormalEquations)
{
    const Matrix X = gaussian_matrix(40, 6, 1);
    const Vector y = gaussian_vector(40, 2);
    const Solution s = solve(RegressionProblem(X, y), PenaltySpec::unit_box(6), 0.0);
    ASSERT_TRUE(s.converged());
    const Vector direct = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    EXPECT_LE((s.beta_hat - direct).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE(dual_vector(RegressionProblem(X, y), s).norm(), 1e-8);
}

TEST(Solve, ConePenaltyGivesNonnegativeLeastSquares)
{
    const RegressionProblem problem(Matrix::Identity(2, 2), vec({-1, 2}));
    const Solution s = solve(problem, kNonnegBeta, 1.0);
    ASSERT_TRUE(s.converged());
    EXPECT_NEAR(s.beta_hat[0], 0.0, 1e-10);
    EXPECT_NEAR(s.beta_hat[1], 2.0, 1e-10);
}

TEST(Solve, OrthogonalDesignMatchesSoftThresholding)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix X = orthogonal_matrix(20, seed);
        const Vector y = 2.0 * gaussian_vector(20, 100 + seed);
        const double lambda = 0.8;
        const Solution s = solve(RegressionProblem(X, y), PenaltySpec::unit_box(20), lambda);
        ASSERT_TRUE(s.converged());
        const Vector z = X.transpose() * y;
        for (Index j = 0; j < 20; ++j) EXPECT_NEAR(s.beta_hat[j], soft_threshold(z[j], lambda), 1e-6);
        // KKT of soft-thresholding.
        const Vector u = dual_vector(RegressionProblem(X, y), s);
        for (Index j = 0; j < 20; ++j) {
            if (std::abs(s.beta_hat[j]) > 1e-9) {
                EXPECT_NEAR(u[j], lambda * (s.beta_hat[j] > 0 ? 1.0 : -1.0), 1e-6);
            } else {
                EXPECT_LE(std::abs(u[j]), lambda + 1e-6);
            }
        }
    }
}

TEST(Solve, DualVectorIsFeasibleForEveryKind)
{
    const Matrix X = gaussian_matrix(30, 6, 7);
    const Vector y = gaussian_vector(30, 8);
    const std::vector<PenaltySpec> kinds{PenaltySpec::unit_box(6), PenaltySpec::box(vec({1, 2, 0.5, 1, 3, 1})),
                                         PenaltySpec::product_l2_balls({{0, 1, 2}, {3, 4}, {5}}, vec({1, 2, 1})),
                                         PenaltySpec::orthant_cone(std::vector<ConeSign>(6, ConeSign::nonpositive))};
    for (const auto& k : kinds) {
        const Solution s = solve(RegressionProblem(X, y), k, 2.0);
        ASSERT_TRUE(s.converged()) << k.describe();
        EXPECT_LE(membership_check(s.u_hat, k, 2.0), 1e-6) << k.describe();
        EXPECT_GE(s.duality_gap, 0.0);
        EXPECT_GE(s.kkt_residual, 0.0);
        EXPECT_LE((s.mu_hat - X * s.beta_hat).norm(), 1e-12);
    }
}

TEST(Solve, StepRulesAgree)
{
    const Matrix X = gaussian_matrix(25, 8, 9);
    const Vector y = gaussian_vector(25, 10);
    const RegressionProblem problem(X, y);
    const PenaltySpec k = PenaltySpec::unit_box(8);
    SolverConfig fixed;
    fixed.step_rule = FixedStep{0.5 / spectral_norm_squared(X)};
    SolverConfig backtracking;
    backtracking.step_rule = BacktrackingStep{0.5};
    const Solution a = solve(problem, k, 1.5);
    const Solution b = solve(problem, k, 1.5, fixed);
    const Solution c = solve(problem, k, 1.5, backtracking);
    ASSERT_TRUE(a.converged() && b.converged() && c.converged());
    EXPECT_LE((a.beta_hat - b.beta_hat).norm(), 1e-6);
    EXPECT_LE((a.beta_hat - c.beta_hat).norm(), 1e-6);
}

TEST(Solve, AccelerationAgreesAndNeedsFewerIterations)
{
    const Matrix X = gaussian_matrix(200, 500, 11);
    const Vector y = X.leftCols(5) * Vector::Constant(5, 3.0) + gaussian_vector(200, 12);
    const double lambda = 0.3 * (X.transpose() * y).cwiseAbs().maxCoeff();
    const RegressionProblem problem(X, y);
    SolverConfig plain;
    plain.accelerated = false;
    plain.tol_gap = 1e-8;
    SolverConfig fast = plain;
    fast.accelerated = true;
    const Solution a = solve(problem, PenaltySpec::unit_box(500), lambda, fast);
    const Solution b = solve(problem, PenaltySpec::unit_box(500), lambda, plain);
    ASSERT_TRUE(a.converged());
    ASSERT_TRUE(b.converged());
    EXPECT_LE((a.beta_hat - b.beta_hat).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT(a.iterations, b.iterations);
}

TEST(Solve, MonotoneDescentWithoutAcceleration)
{
    const Matrix X = gaussian_matrix(30, 12, 13);
    const Vector y = gaussian_vector(30, 14);
    const RegressionProblem problem(X, y);
    const PenaltySpec k = PenaltySpec::unit_box(12);
    SolverConfig config;
    config.accelerated = false;
    double previous = objective_value(problem, k, 1.0, Vector::Zero(12));
    std::size_t steps = 0;
    config.on_iterate = [&](std::size_t, const Vector& beta) {
        const double value = objective_value(problem, k, 1.0, beta);
        EXPECT_LE(value, previous + 1e-12 * (1.0 + std::abs(previous)));
        previous = value;
        ++steps;
    };
    ASSERT_TRUE(solve(problem, k, 1.0, config).converged());
    EXPECT_GT(steps, 0u);
}

TEST(Solve, GapBoundsTheDistanceWhenStronglyConvex)
{
    const Matrix X = gaussian_matrix(40, 8, 15);
    const Vector y = gaussian_vector(40, 16);
    const RegressionProblem problem(X, y);
    const PenaltySpec k = PenaltySpec::unit_box(8);
    const double lambda_min = Eigen::SelfAdjointEigenSolver<Matrix>(X.transpose() * X).eigenvalues()[0];
    const Solution exact = solve(problem, k, 2.0);
    ASSERT_TRUE(exact.converged());
    SolverConfig loose;
    loose.accelerated = false;
    loose.on_iterate = [&](std::size_t, const Vector& beta) {
        const double gap = certify(problem, k, 2.0, beta).duality_gap;
        EXPECT_LE((beta - exact.beta_hat).squaredNorm(), 2.0 * gap / lambda_min + 1e-12);
    };
    loose.max_iter = 200;
    solve(problem, k, 2.0, loose);
}

TEST(Solve, FixedPointSatisfiesKkt)
{
    const Matrix X = gaussian_matrix(20, 5, 17);
    const Vector y = gaussian_vector(20, 18);
    const RegressionProblem problem(X, y);
    const PenaltySpec k = PenaltySpec::unit_box(5);
    const Solution s = solve(problem, k, 1.0);
    ASSERT_TRUE(s.converged());
    const double alpha = 1.0 / spectral_norm_squared(X);
    const Vector next = prox_penalty(s.beta_hat - alpha * X.transpose() * (X * s.beta_hat - y), k, alpha);
    EXPECT_LE((next - s.beta_hat).norm(), 1e-6);
    EXPECT_LE(membership_check(dual_vector(problem, s), k, 1.0), kDualFeasibilityTolerance);
}

TEST(Solve, MatchesGridSearchInTwoDimensions)
{
    const Matrix X = gaussian_matrix(6, 2, 19);
    const Vector y = gaussian_vector(6, 20);
    const RegressionProblem problem(X, y);
    for (const auto& k : {PenaltySpec::unit_box(2), PenaltySpec::l2_ball(2), kNonnegBeta}) {
        const Solution s = solve(problem, k, 0.7);
        ASSERT_TRUE(s.converged());
        const double step = 0.005;
        Vector best = Vector::Zero(2);
        double best_value = kInfinity;
        Vector b(2);
        for (int i = -600; i <= 600; ++i) {
            for (int j = -600; j <= 600; ++j) {
                b << i * step, j * step;
                const double value = objective_value(problem, k, 0.7, b);
                if (value < best_value) {
                    best_value = value;
                    best = b;
                }
            }
        }
        EXPECT_LE((s.beta_hat - best).cwiseAbs().maxCoeff(), 2.0 * step) << k.describe();
        EXPECT_LE(s.objective, best_value + 1e-12);
    }
}

TEST(Solve, ReportsNonConvergenceWithTheBestIterate)
{
    const Matrix X = gaussian_matrix(30, 10, 21);
    const Vector y = gaussian_vector(30, 22);
    SolverConfig config;
    config.max_iter = 3;
    const Solution s = solve(RegressionProblem(X, y), PenaltySpec::unit_box(10), 0.5, config);
    EXPECT_FALSE(s.converged());
    EXPECT_EQ(s.status, SolveStatus::max_iterations);
    EXPECT_TRUE(s.beta_hat.allFinite());
    EXPECT_GT(s.duality_gap, 0.0);
}

TEST(Solve, OversizedFixedStepIsANumericalError)
{
    const Matrix X = 10.0 * gaussian_matrix(30, 10, 23);
    const Vector y = gaussian_vector(30, 24);
    SolverConfig config;
    config.step_rule = FixedStep{10.0};
    config.accelerated = false;
    EXPECT_THROW(solve(RegressionProblem(X, y), PenaltySpec::unit_box(10), 0.1, config), NumericalError);
}

TEST(SolverConfig, RejectsInvalidSettings)
{
    SolverConfig c;
    c.step_rule = FixedStep{0.0};
    EXPECT_THROW(c.validate(), InvalidArgument);
    c.step_rule = BacktrackingStep{1.0};
    EXPECT_THROW(c.validate(), InvalidArgument);
    c.step_rule = InverseSpectralStep{};
    c.tol_gap = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(SpectralNorm, MatchesTheLargestSingularValue)
{
    const Matrix X = gaussian_matrix(50, 20, 25);
    const double s = Eigen::JacobiSVD<Matrix>(X).singularValues()[0];
    EXPECT_NEAR(spectral_norm_squared(X, 1000, 1e-14), s * s, 1e-8 * s * s);
    EXPECT_LE(spectral_norm_squared(X), s * s * (1 + 1e-12));
}

TEST(DualityGap, HandEvaluatedAtTheOrigin)
{
    const RegressionProblem problem(Matrix::Identity(2, 2), vec({1, 0}));
    EXPECT_NEAR(duality_gap(problem, PenaltySpec::unit_box(2), 1.0, Vector::Zero(2), Vector::Zero(2)), 0.5, 1e-15);
}

TEST(DualityGap, OptimalPairHasTinyGap)
{
    const Matrix X = gaussian_matrix(30, 6, 27);
    const Vector y = gaussian_vector(30, 28);
    const RegressionProblem problem(X, y);
    const PenaltySpec k = PenaltySpec::unit_box(6);
    const Solution s = solve(problem, k, 1.0);
    const double gap = duality_gap(problem, k, 1.0, s.beta_hat, s.u_hat);
    EXPECT_GE(gap, -1e-10);
    EXPECT_LE(gap, 1e-8);
}

TEST(DualityGap, GrowsQuadraticallyAwayFromTheOptimum)
{
    const Matrix X = gaussian_matrix(30, 6, 29);
    const Vector y = gaussian_vector(30, 30);
    const RegressionProblem problem(X, y);
    const PenaltySpec k = PenaltySpec::l2_ball(6);
    const Solution s = solve(problem, k, 1.0);
    const Vector direction = gaussian_vector(6, 31).normalized();
    double previous_ratio = 0.0;
    for (double delta : {1e-2, 5e-3, 2.5e-3}) {
        const double gap = duality_gap(problem, k, 1.0, s.beta_hat + delta * direction, s.u_hat) -
                           duality_gap(problem, k, 1.0, s.beta_hat, s.u_hat);
        const double ratio = gap / (delta * delta);
        EXPECT_GT(ratio, 0.0);
        if (previous_ratio > 0.0) EXPECT_NEAR(ratio, previous_ratio, 0.05 * previous_ratio);
        previous_ratio = ratio;
    }
}

TEST(DualityGap, InfeasibleDualVectorNamesTheConstraint)
{
    const RegressionProblem square(Matrix::Identity(2, 2), vec({1, 0}));
    try {
        duality_gap(square, PenaltySpec::unit_box(2), 1.0, Vector::Zero(2), vec({3, 0}));
        FAIL() << "expected InfeasibleDual";
    } catch (const InfeasibleDual& e) {
        EXPECT_NE(std::string(e.what()).find("lambda*K"), std::string::npos);
    }
    Matrix X(3, 2);
    X << 1, 1, 1, 1, 0, 0;  // row space spanned by (1, 1)
    const RegressionProblem rank_one(X, vec({1, 0, 0}));
    try {
        duality_gap(rank_one, PenaltySpec::unit_box(2), 1.0, Vector::Zero(2), vec({0.5, -0.5}));
        FAIL() << "expected InfeasibleDual";
    } catch (const InfeasibleDual& e) {
        EXPECT_NE(std::string(e.what()).find("row(X)"), std::string::npos);
    }
}

TEST(ResidualForm, IdentityDesignForEveryKind)
{
    const Vector y = 2.0 * gaussian_vector(4, 33);
    const RegressionProblem problem(Matrix::Identity(4, 4), y);
    for (const auto& k : {PenaltySpec::unit_box(4), PenaltySpec::l2_ball(4),
                          PenaltySpec::orthant_cone(std::vector<ConeSign>(4, ConeSign::nonpositive))}) {
        const Solution s = solve(problem, k, 0.8);
        EXPECT_LE(residual_form_check(problem, k, 0.8, s), 1e-8) << k.describe();
    }
}

TEST(ResidualForm, DiagonalDesignInClosedForm)
{
    Matrix X = Matrix::Zero(2, 2);
    X.diagonal() << 1, 2;
    const RegressionProblem problem(X, vec({3, 3}));
    const Solution s = solve(problem, PenaltySpec::unit_box(2), 1.0);
    // beta_j = soft(x_j y_j, 1) / x_j^2.
    EXPECT_NEAR(s.beta_hat[0], 2.0, 1e-8);
    EXPECT_NEAR(s.beta_hat[1], 1.25, 1e-8);
    EXPECT_LE(residual_form_check(problem, PenaltySpec::unit_box(2), 1.0, s), 1e-6);
}

TEST(ResidualForm, LambdaZeroFitsTheResponse)
{
    const Matrix X = gaussian_matrix(5, 5, 35);
    const Vector y = gaussian_vector(5, 36);
    const RegressionProblem problem(X, y);
    EXPECT_EQ(residual_form_projection(problem, PenaltySpec::unit_box(5), 0.0), Vector::Zero(5));
    const Solution s = solve(problem, PenaltySpec::unit_box(5), 0.0);
    EXPECT_LE((s.mu_hat - y).norm(), 1e-8);
}

TEST(ResidualForm, RejectsSingularDesigns)
{
    Matrix X = Matrix::Identity(3, 3);
    X(2, 2) = 0.0;
    const RegressionProblem problem(X, vec({1, 2, 3}));
    EXPECT_THROW(residual_form_projection(problem, PenaltySpec::unit_box(3), 1.0), NumericalError);
    const RegressionProblem rectangular(Matrix::Ones(3, 2), vec({1, 2, 3}));
    EXPECT_THROW(residual_form_projection(rectangular, PenaltySpec::unit_box(2), 1.0), DimensionError);
}

TEST(ClassicalError, NoNoiseGivesZeroBound)
{
    const Matrix X = gaussian_matrix(20, 4, 37);
    const Vector beta0 = gaussian_vector(4, 38);
    const auto b = classical_error_certificate(RegressionProblem(X, X * beta0), beta0, Vector::Zero(20));
    EXPECT_EQ(b.bound, 0.0);
    EXPECT_LE(b.actual_error, 1e-12);
}

TEST(ClassicalError, IdentityDesign)
{
    const Vector eps = gaussian_vector(6, 39);
    const Vector beta0 = gaussian_vector(6, 40);
    const auto b = classical_error_certificate(RegressionProblem(Matrix::Identity(6, 6), beta0 + eps, 1.0), beta0, eps);
    EXPECT_NEAR(b.bound, 2.0 * eps.norm(), 1e-12);
    EXPECT_NEAR(b.actual_error, eps.norm(), 1e-12);
    ASSERT_TRUE(b.zeta.has_value());
    EXPECT_NEAR(*b.zeta, std::sqrt(6.0) * eps.norm(), 1e-12);
}

TEST(ClassicalError, BoundHoldsInEveryTrial)
{
    int held = 0;
    for (std::uint64_t t = 0; t < 1000; ++t) {
        const Matrix X = gaussian_matrix(50, 10, 10000 + t);
        const Vector beta0 = gaussian_vector(10, 20000 + t);
        const Vector eps = gaussian_vector(50, 30000 + t);
        const auto b = classical_error_certificate(RegressionProblem(X, X * beta0 + eps), beta0, eps);
        if (b.bound >= b.actual_error) ++held;
    }
    EXPECT_EQ(held, 1000);
}

TEST(ClassicalError, RejectsRankDeficientDesigns)
{
    const Matrix X = gaussian_matrix(3, 5, 41);
    EXPECT_THROW(classical_error_certificate(RegressionProblem(X, gaussian_vector(3, 42)), Vector::Zero(5),
                                             Vector::Zero(3)),
                 NumericalError);
}

TEST(LambdaRecommendation, OneDimensionalBoxUsesTheHalfNormalMean)
{
    const McOptions mc{400000, 3, 1};
    const MeanEstimate r = lambda_recommendation(Matrix::Identity(1, 1), PenaltySpec::unit_box(1), 1.5, 2.0, mc);
    const double exact = 2.0 * 1.5 * std::sqrt(2.0 / std::numbers::pi);
    EXPECT_NEAR(r.mean, exact, 3.0 * r.std_error);
}

TEST(LambdaRecommendation, ScalesWithSigma)
{
    const Matrix X = gaussian_matrix(10, 4, 43);
    const McOptions mc{5000, 4, 1};
    EXPECT_EQ(lambda_recommendation(X, PenaltySpec::unit_box(4), 0.0, 1.0, mc).mean, 0.0);
    const double one = lambda_recommendation(X, PenaltySpec::unit_box(4), 1.0, 1.0, mc).mean;
    const double two = lambda_recommendation(X, PenaltySpec::unit_box(4), 2.0, 1.0, mc).mean;
    EXPECT_EQ(two, 2.0 * one);
}

TEST(LambdaRecommendation, RejectsUnboundedPolar)
{
    const McOptions mc{100, 4, 1};
    EXPECT_THROW(lambda_recommendation(Matrix::Identity(2, 2), kNonnegBeta, 1.0, 1.0, mc), InvalidArgument);
}
