#include "lsgeom/risk_dof.hpp"

#include "lsgeom/errors.hpp"
#include "lsgeom/path_inference.hpp"
#include "lsgeom/projection.hpp"

#include <cmath>

namespace lsgeom {

namespace {

/// Bound on |u_j| for a Box coordinate, or 0 for a restricted cone coordinate.
bool near_stratum_boundary(const PenaltySpec& K, double lambda, Index j, double u)
{
    if (const auto* box = std::get_if<PenaltySpec::Box>(&K.kind())) {
        return std::abs(std::abs(u) - lambda * box->radii[j]) < kStratumTolerance;
    }
    const auto& signs = std::get<PenaltySpec::OrthantCone>(K.kind()).signs;
    return signs[static_cast<std::size_t>(j)] != ConeSign::free && std::abs(u) < kStratumTolerance;
}

}  // namespace

std::string to_string(DofMethod method)
{
    switch (method) {
    case DofMethod::polyhedral_rank: return "polyhedral_rank";
    case DofMethod::finite_difference: return "finite_difference";
    case DofMethod::monte_carlo_cov: return "monte_carlo_cov";
    }
    return "unknown";
}

DofEstimate dof_polyhedral(const RegressionProblem& problem, const PenaltySpec& K, double lambda,
                           const Solution& solution)
{
    if (!K.is_polyhedral()) throw InvalidArgument("polyhedral dof needs a Box or OrthantCone penalty, got " + K.describe());
    if (!solution.converged()) throw InvalidArgument("polyhedral dof needs a converged solution");
    const Matrix& X = problem.design();
    detail::require_dimension(K.dimension(), X.cols(), "penalty");
    detail::require_dimension(solution.beta_hat.size(), X.cols(), "beta_hat");

    const Vector u = X.transpose() * (problem.response() - X * solution.beta_hat);
    std::vector<Index> active;
    DofEstimate out;
    out.method = DofMethod::polyhedral_rank;
    for (Index j = 0; j < X.cols(); ++j) {
        if (std::abs(solution.beta_hat[j]) > kFaceTolerance) {
            active.push_back(j);
        } else if (lambda > 0.0 && near_stratum_boundary(K, lambda, j, u[j])) {
            out.generic = false;
        }
    }
    out.detail = static_cast<Index>(active.size());
    if (active.empty()) return out;
    Matrix x_active(X.rows(), out.detail);
    for (Index i = 0; i < out.detail; ++i) x_active.col(i) = X.col(active[static_cast<std::size_t>(i)]);
    out.dof = static_cast<double>(x_active.colPivHouseholderQr().rank());
    return out;
}

DofEstimate divergence_fd(const FitMap& fit, const Vector& y, double h, unsigned threads)
{
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("finite-difference step h must be positive");
    detail::require_finite(y, "y");
    const Index n = y.size();
    std::vector<double> terms(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        const auto k = static_cast<Index>(i);
        Vector plus = y;
        Vector minus = y;
        plus[k] += h;
        minus[k] -= h;
        const Vector f_plus = fit(plus);
        const Vector f_minus = fit(minus);
        detail::require_dimension(f_plus.size(), n, "fit output");
        detail::require_dimension(f_minus.size(), n, "fit output");
        terms[i] = (f_plus[k] - f_minus[k]) / (2.0 * h);
    });
    DofEstimate out;
    out.method = DofMethod::finite_difference;
    out.detail = 2 * n;
    for (double t : terms) out.dof += t;
    return out;
}

FitMap solver_fit_map(const Matrix& X, const PenaltySpec& K, double lambda, SolverConfig config)
{
    config.on_iterate = nullptr;
    return [X, K, lambda, config](const Vector& y) -> Vector {
        const Solution s = solve(RegressionProblem(X, y), K, lambda, config);
        if (!s.converged()) {
            throw NumericalError("fit did not converge (duality gap " + std::to_string(s.duality_gap) + ")");
        }
        return s.mu_hat;
    };
}

FitMap lasso_path_fit_map(const Matrix& X, double lambda)
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be nonnegative and finite");
    return [X, lambda](const Vector& y) -> Vector {
        const LassoPath path = lasso_path(X, y, 16 * static_cast<std::size_t>(X.cols() + 1));
        if (lambda < path.lambda_floor()) throw NumericalError("LASSO path stopped above lambda");
        return X * path.coefficients(lambda);
    };
}

double sure_risk(const Vector& y, const Vector& mu_hat, double dof, double sigma_sq)
{
    if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) throw InvalidArgument("sigma_sq must be positive");
    detail::require_dimension(mu_hat.size(), y.size(), "mu_hat");
    const auto n = static_cast<double>(y.size());
    return (y - mu_hat).squaredNorm() - n * sigma_sq + 2.0 * sigma_sq * dof;
}

DofEstimate dof_monte_carlo(const FitMap& fit, const Vector& mu, double sigma, const McOptions& mc)
{
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be positive");
    if (mc.samples < 2) throw InvalidArgument("mc_samples must be at least 2");
    const std::uint64_t key = derive_key(mc.seed, "dof_monte_carlo");
    const MeanEstimate est = mc_mean(mc.samples, mc.threads, [&](std::uint64_t i) {
        CounterStream rng(key, i);
        Vector eps(mu.size());
        rng.fill_normal(eps);
        return fit(mu + sigma * eps).dot(eps) / sigma;
    });
    DofEstimate out;
    out.method = DofMethod::monte_carlo_cov;
    out.dof = est.mean;
    out.std_error = est.std_error;
    out.detail = static_cast<Index>(mc.samples);
    return out;
}

SureStudy sure_study(const Matrix& X, const Vector& beta0, const PenaltySpec& K, double lambda, double sigma,
                     const McOptions& mc, SolverConfig config)
{
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be positive");
    if (mc.samples < 2) throw InvalidArgument("mc_samples must be at least 2");
    detail::require_dimension(beta0.size(), X.cols(), "beta0");
    config.on_iterate = nullptr;
    const Vector mu = X * beta0;
    const double sigma_sq = sigma * sigma;
    const std::uint64_t key = derive_key(mc.seed, "sure_study");

    const auto moments = mc_moments(mc.samples, mc.threads, 4, [&](std::uint64_t i, std::span<double> out) {
        CounterStream rng(key, i);
        Vector eps(mu.size());
        rng.fill_normal(eps);
        const RegressionProblem problem(X, mu + sigma * eps, sigma);
        const Solution s = solve(problem, K, lambda, config);
        if (!s.converged()) throw NumericalError("SURE study: replicate " + std::to_string(i) + " did not converge");
        const double dof = dof_polyhedral(problem, K, lambda, s).dof;
        out[0] = sure_risk(problem.response(), s.mu_hat, dof, sigma_sq);
        out[1] = (mu - s.mu_hat).squaredNorm();
        out[2] = out[0] - out[1];
        out[3] = dof;
    });
    return {moments[0], moments[1], moments[2], moments[3].mean};
}

}  // namespace lsgeom
