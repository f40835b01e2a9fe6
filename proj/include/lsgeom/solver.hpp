#pragma once

#include "lsgeom/core_model.hpp"
#include "lsgeom/random.hpp"

#include <functional>
#include <optional>
#include <variant>

namespace lsgeom {

/// Constant step alpha.
struct FixedStep {
    double alpha = 1.0;
};

/// alpha = 1 / ||X||_op^2, the norm estimated by power iteration.
struct InverseSpectralStep {};

/// Start at alpha = 1 and multiply by `shrink` until the quadratic upper bound holds.
struct BacktrackingStep {
    double shrink = 0.5;
};

using StepRule = std::variant<FixedStep, InverseSpectralStep, BacktrackingStep>;

struct SolverConfig {
    StepRule step_rule = InverseSpectralStep{};
    bool accelerated = true;
    /// Stop once the duality gap falls to this value.
    double tol_gap = 1e-10;
    /// Cone penalties: the dual vector must also be this close to lambda K.
    /// Bounded penalties use kDualFeasibilityTolerance instead.
    double tol_feasibility = 1e-9;
    std::size_t max_iter = 100000;
    /// Called with (iteration, beta) after every proximal step.
    std::function<void(std::size_t, const Vector&)> on_iterate;

    void validate() const;
};

/// Optimality certificate of a primal point.
struct Certificate {
    double duality_gap = 0.0;
    double dual_feasibility_residual = 0.0;
    double kkt_stationarity_residual = 0.0;
};

/// ||X||_op^2 by power iteration on X'X (at most `max_iter` steps, relative tolerance `tol`).
double spectral_norm_squared(const Matrix& X, int max_iter = 50, double tol = 1e-10);

/// Proximal gradient descent from beta = 0 for 1/2 ||y - X b||^2 + lambda h_K(b).
///
/// Stops on the duality gap. On hitting max_iter the best iterate seen is
/// returned with status max_iterations. Throws NumericalError when an iterate
/// becomes non-finite (typically a fixed step that is too large).
Solution solve(const RegressionProblem& problem, const PenaltySpec& K, double lambda, const SolverConfig& config = {});

/// u = X'(y - X beta_hat), the dual vector paired with beta_hat.
Vector dual_vector(const RegressionProblem& problem, const Solution& solution);

/// Feasibility tolerance accepted by duality_gap for a caller-supplied dual vector.
inline constexpr double kDualFeasibilityTolerance = 1e-6;

/// Primal value at beta minus the dual value at u.
///
/// The dual value is 1/2 ||y||^2 - 1/2 (u - w)'(X'X)^+(u - w) with w = X'y,
/// defined for u in lambda K intersected with row(X). Throws InfeasibleDual
/// naming the violated constraint when u is outside either set beyond
/// kDualFeasibilityTolerance.
double duality_gap(const RegressionProblem& problem, const PenaltySpec& K, double lambda, const Vector& beta,
                   const Vector& u);

/// Gap, dual feasibility and prox-gradient stationarity residual at beta.
/// The gap uses X'(y - X beta) rescaled into lambda K when K is bounded;
/// the feasibility residual is that of the unscaled vector.
Certificate certify(const RegressionProblem& problem, const PenaltySpec& K, double lambda, const Vector& beta);

/// pi_{lambda X^{-T} K}(y) for square invertible X, computed in the variable
/// u = X' r over lambda K by accelerated projected gradient.
Vector residual_form_projection(const RegressionProblem& problem, const PenaltySpec& K, double lambda);

/// ||X beta_hat - (y - pi_{lambda X^{-T} K}(y))||, the fitted-value residual identity.
double residual_form_check(const RegressionProblem& problem, const PenaltySpec& K, double lambda,
                           const Solution& solution);

/// Deterministic bound on the least-squares error for y = X beta0 + eps.
struct ClassicalErrorBound {
    double bound = 0.0;         ///< 2 ||X' eps|| / lambda_min(X'X)
    double actual_error = 0.0;  ///< ||beta_LS - beta0||
    double lambda_min = 0.0;
    std::optional<double> zeta;  ///< sigma^{-1/2} n^{1/2} ||X' eps|| / lambda_min, when sigma is known
};

ClassicalErrorBound classical_error_certificate(const RegressionProblem& problem, const Vector& beta0,
                                                const Vector& eps);

/// C1 * sigma * E h_{K polar}(-X' g) for standard normal g, by Monte Carlo.
MeanEstimate lambda_recommendation(const Matrix& X, const PenaltySpec& K, double sigma, double C1,
                                   const McOptions& mc);

}  // namespace lsgeom
