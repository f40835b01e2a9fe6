#pragma once

#include "lsgeom/core_model.hpp"
#include "lsgeom/random.hpp"

#include <string>
#include <vector>

namespace lsgeom {

enum class PathEventKind { add, drop };

struct PathEvent {
    PathEventKind kind = PathEventKind::add;
    Index variable = 0;
};

/// beta(lambda) = intercept + lambda * slope for lambda in [lambda_lower, lambda_upper].
struct PathSegment {
    double lambda_upper = 0.0;
    double lambda_lower = 0.0;
    Vector intercept;
    Vector slope;
};

/// Piecewise-linear LASSO solution path.
///
/// Knot k (0-based) carries the event that happens there and the active set
/// and signs in force just below it; segments[k] covers [next knot, knot k].
/// beta(lambda) = 0 for lambda >= knots[0].
struct LassoPath {
    std::vector<double> knots;
    std::vector<PathSegment> segments;
    std::vector<std::vector<Index>> active_sets;
    std::vector<std::vector<int>> signs;
    std::vector<PathEvent> events;
    std::vector<std::string> warnings;
    Index dimension = 0;
    /// True when the last segment reaches lambda = 0.
    bool complete = false;

    /// Smallest lambda covered by the computed segments.
    double lambda_floor() const;

    /// beta(lambda); throws InvalidArgument below lambda_floor().
    Vector coefficients(double lambda) const;
};

/// Two entry or exit events closer than this (relative to the first knot) count as a tie.
inline constexpr double kKnotTieTolerance = 1e-12;

/// LASSO homotopy with variable drops, computing at most `max_steps` knots.
///
/// Entry ties are resolved toward the lowest column index and recorded in
/// LassoPath::warnings. Throws PathError when an active block is rank
/// deficient, naming the step.
LassoPath lasso_path(const Matrix& X, const Vector& y, std::size_t max_steps);

struct CovTestResult {
    std::size_t k = 0;
    double statistic = 0.0;
    double p_value = 1.0;
    double sigma_sq = 1.0;
};

/// Covariance statistic at knot k (1-based):
///   T_k = (<y, X beta(lambda_{k+1})> - <y, X_A beta_A~(lambda_{k+1})>) / sigma^2
/// where A is the active set just above lambda_k and beta_A~ is the LASSO on
/// the columns A alone. The p-value is exp(-T_k).
CovTestResult covariance_statistic(const LassoPath& path, const Matrix& X, const Vector& y, std::size_t k,
                                   double sigma_sq);

/// lambda_k (lambda_k - lambda_{k+1}) / sigma^2, the knot form with unit scaling.
double covariance_statistic_knot_form(const LassoPath& path, std::size_t k, double sigma_sq);

/// Kolmogorov-Smirnov distance between a sample and the Exp(1) law.
double ks_distance_exp1(std::vector<double> sample);

struct NullCalibration {
    std::vector<double> statistics;  ///< T_k per replicate, in replicate order
    std::vector<double> sorted;      ///< order statistics, the support of the empirical CDF
    double ks_distance = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t resampled = 0;  ///< degenerate draws replaced by a fresh draw

    /// Fraction of replicates with T_k <= t.
    double empirical_cdf(double t) const;
};

/// Samples T_k under y ~ N(0, sigma^2 I) with `mc.samples` replicates.
NullCalibration null_calibration(const Matrix& X, double sigma, std::size_t k, const McOptions& mc);

}  // namespace lsgeom
