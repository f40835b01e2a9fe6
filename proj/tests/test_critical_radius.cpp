#include "lsgeom/errors.hpp"
#include "lsgeom/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace lsgeom;

namespace {

std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> grid(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    return grid;
}

/// Var(f(y) | f(x), f'(x)) for the unit squared-exponential kernel as 1 / (Sigma^{-1})_{00},
/// Sigma the covariance of (f(y), f(x), f'(x)) inverted by cofactors.
long double conditioning_oracle(long double x, long double y)
{
    const long double d = x - y;
    const long double c = std::exp(-0.5L * d * d);
    // Cov(f(y), f'(x)) = dC(x, y)/dx.
    const long double b = -d * c;
    const long double s[3][3] = {{1.0L, c, b}, {c, 1.0L, 0.0L}, {b, 0.0L, 1.0L}};
    const long double det = s[0][0] * (s[1][1] * s[2][2] - s[1][2] * s[2][1]) -
                            s[0][1] * (s[1][0] * s[2][2] - s[1][2] * s[2][0]) +
                            s[0][2] * (s[1][0] * s[2][1] - s[1][1] * s[2][0]);
    const long double cof00 = s[1][1] * s[2][2] - s[1][2] * s[2][1];
    const long double variance = det / cof00;
    return variance / ((1.0L - c) * (1.0L - c));
}

}  // namespace

TEST(CriticalRadius, CosineKernelIsExactlyDegenerate)
{
    const auto grid = linspace(0.0, std::numbers::pi / 3.0, 100);
    const CriticalRadiusEstimate est = critical_radius_process(KernelSpec::cosine(), grid);
    EXPECT_LE(est.cot_sq, 1e-10);
    EXPECT_NEAR(est.r_c, std::numbers::pi / 2.0, 1e-5);
    EXPECT_GT(est.admissible_pairs, 0u);
}

TEST(CriticalRadius, SquaredExponentialMatchesTheConditioningOracle)
{
    const auto grid = linspace(0.0, 3.0, 200);
    const CriticalRadiusEstimate est = critical_radius_process(KernelSpec::squared_exponential(), grid);
    const double delta = 2.0 * 3.0 / 199.0;
    EXPECT_NEAR(est.delta, delta, 1e-15);
    long double best = 0.0L;
    std::size_t pairs = 0;
    for (double x : grid) {
        for (double y : grid) {
            if (std::abs(x - y) < delta * (1.0 - 1e-9)) continue;
            ++pairs;
            best = std::max(best, conditioning_oracle(x, y));
        }
    }
    EXPECT_EQ(est.admissible_pairs, pairs);
    EXPECT_NEAR(est.cot_sq, static_cast<double>(best), 1e-8 * std::max(1.0L, best));
    EXPECT_NEAR(est.r_c, std::atan2(1.0, std::sqrt(est.cot_sq)), 1e-15);
    ASSERT_TRUE(est.argmax_pair.has_value());
    EXPECT_NEAR(static_cast<double>(conditioning_oracle(est.argmax_pair->first, est.argmax_pair->second)), est.cot_sq,
                1e-8 * std::max(1.0, est.cot_sq));
}

TEST(CriticalRadius, ConditionedMomentAgreesPointwise)
{
    const KernelSpec kernel = KernelSpec::squared_exponential();
    for (double x : {0.0, 0.7, 2.0}) {
        for (double y : {0.3, 1.5, 2.9}) {
            EXPECT_NEAR(static_cast<double>(conditioned_second_moment(kernel, x, y)),
                        static_cast<double>(conditioning_oracle(x, y)), 1e-12);
        }
    }
}

TEST(CriticalRadius, LengthScaleRescalesTheIndex)
{
    // C(s, t) = exp(-(s - t)^2 / (2 l^2)) on l * grid equals the unit kernel on grid.
    const auto grid = linspace(0.0, 3.0, 60);
    std::vector<double> stretched;
    for (double t : grid) stretched.push_back(2.0 * t);
    const auto a = critical_radius_process(KernelSpec::squared_exponential(), grid);
    const auto b = critical_radius_process(KernelSpec::squared_exponential(2.0), stretched);
    EXPECT_NEAR(a.cot_sq, b.cot_sq, 1e-9 * std::max(1.0, a.cot_sq));
}

TEST(CriticalRadius, SinglePointHasAnEmptySupremum)
{
    const std::vector<double> grid{1.0};
    const CriticalRadiusEstimate est = critical_radius_process(KernelSpec::squared_exponential(), grid, 0.1);
    EXPECT_EQ(est.cot_sq, 0.0);
    EXPECT_DOUBLE_EQ(est.r_c, std::numbers::pi / 2.0);
    EXPECT_FALSE(est.argmax_pair.has_value());
    EXPECT_EQ(est.admissible_pairs, 0u);
}

TEST(CriticalRadius, GridRefinementIsStable)
{
    const auto coarse = critical_radius_process(KernelSpec::squared_exponential(), linspace(0.0, 3.0, 200), 0.05);
    const auto fine = critical_radius_process(KernelSpec::squared_exponential(), linspace(0.0, 3.0, 399), 0.05);
    EXPECT_LT(std::abs(fine.cot_sq - coarse.cot_sq), 0.01 * coarse.cot_sq);
}

TEST(CriticalRadius, RejectsInvalidKernelsAndGrids)
{
    const auto grid = linspace(0.0, 1.0, 10);
    KernelSpec flat = KernelSpec::squared_exponential();
    flat.d_mixed = [](long double, long double) { return 0.0L; };
    EXPECT_THROW(critical_radius_process(flat, grid), InvalidArgument);

    KernelSpec scaled = KernelSpec::squared_exponential();
    scaled.covariance = [](long double s, long double t) { return 2.0L * std::exp(-0.5L * (s - t) * (s - t)); };
    EXPECT_THROW(critical_radius_process(scaled, grid), InvalidArgument);

    KernelSpec unflagged = KernelSpec::cosine();
    unflagged.unit_variance = false;
    EXPECT_THROW(critical_radius_process(unflagged, grid), InvalidArgument);

    const std::vector<double> unsorted{0.0, 2.0, 1.0};
    EXPECT_THROW(critical_radius_process(KernelSpec::cosine(), unsorted), InvalidArgument);
    EXPECT_THROW(critical_radius_process(KernelSpec::cosine(), std::vector<double>{}), InvalidArgument);
    EXPECT_THROW(critical_radius_process(KernelSpec::cosine(), grid, -1.0), InvalidArgument);
}

TEST(CriticalRadius, PerfectlyCorrelatedDistinctPointsAreANumericalError)
{
    const std::vector<double> grid{0.0, 1.0, 2.0 * std::numbers::pi};
    EXPECT_THROW(critical_radius_process(KernelSpec::cosine(), grid, 0.5), NumericalError);
}
