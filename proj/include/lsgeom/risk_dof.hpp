#pragma once

#include "lsgeom/core_model.hpp"
#include "lsgeom/random.hpp"
#include "lsgeom/solver.hpp"

#include <functional>
#include <string>

namespace lsgeom {

enum class DofMethod { polyhedral_rank, finite_difference, monte_carlo_cov };

struct DofEstimate {
    double dof = 0.0;
    DofMethod method = DofMethod::polyhedral_rank;
    /// Active-set size for polyhedral_rank, number of probes for finite_difference, replicates for monte_carlo_cov.
    Index detail = 0;
    /// False when an inactive coordinate sits within kStratumTolerance of its bound.
    bool generic = true;
    double std_error = 0.0;  ///< monte_carlo_cov only
};

inline constexpr double kStratumTolerance = 1e-6;

/// rank(X_A) with A = {j : beta_hat_j != 0}. K must be a Box or an OrthantCone.
DofEstimate dof_polyhedral(const RegressionProblem& problem, const PenaltySpec& K, double lambda,
                           const Solution& solution);

using FitMap = std::function<Vector(const Vector&)>;

/// sum_i (fit(y + h e_i)_i - fit(y - h e_i)_i) / (2h), with the 2n fits spread over `threads`.
DofEstimate divergence_fd(const FitMap& fit, const Vector& y, double h, unsigned threads = 1);

/// y -> X beta_hat(y) by the solver; throws NumericalError when a fit does not converge.
FitMap solver_fit_map(const Matrix& X, const PenaltySpec& K, double lambda, SolverConfig config = {});

/// y -> X beta(lambda) read off the exact LASSO homotopy (unit box penalty).
FitMap lasso_path_fit_map(const Matrix& X, double lambda);

/// ||y - mu_hat||^2 - n sigma^2 + 2 sigma^2 dof.
double sure_risk(const Vector& y, const Vector& mu_hat, double dof, double sigma_sq);

/// sum_i Cov(mu_hat_i, y_i) / sigma^2 for y ~ N(mu, sigma^2 I), estimated by Monte Carlo.
DofEstimate dof_monte_carlo(const FitMap& fit, const Vector& mu, double sigma, const McOptions& mc);

struct SureStudy {
    MeanEstimate sure;        ///< mean SURE over replicates
    MeanEstimate true_loss;   ///< mean ||mu - mu_hat||^2
    MeanEstimate difference;  ///< paired SURE - loss
    double mean_dof = 0.0;
};

/// Repeated draws y = X beta0 + sigma eps with the solver fit and polyhedral dof.
SureStudy sure_study(const Matrix& X, const Vector& beta0, const PenaltySpec& K, double lambda, double sigma,
                     const McOptions& mc, SolverConfig config = {});

std::string to_string(DofMethod method);

}  // namespace lsgeom
