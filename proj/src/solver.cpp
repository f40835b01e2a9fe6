#include "lsgeom/solver.hpp"

#include "lsgeom/errors.hpp"
#include "lsgeom/projection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lsgeom {

namespace {

void check_lambda(double lambda)
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be nonnegative and finite");
}

void check_problem_penalty(const RegressionProblem& problem, const PenaltySpec& K)
{
    detail::require_dimension(K.dimension(), problem.features(), "penalty");
}

// Projection of y onto col(X), computed once per problem. The gap below is
// written so that no term of size ||y||^2 is cancelled.
class GapEvaluator {
public:
    GapEvaluator(const RegressionProblem& problem, const PenaltySpec& K, double lambda)
        : problem_(problem), K_(K), lambda_(lambda)
    {
        const Matrix& X = problem.design();
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);
        fitted_response_ = X * cod.solve(problem.response());
    }

    Certificate at(const Vector& beta, const Vector& x_beta) const
    {
        const Vector residual = problem_.response() - x_beta;
        const Vector u = problem_.design().transpose() * residual;
        if (!u.allFinite()) throw NumericalError("non-finite residual correlation X'(y - X beta); the iterates diverged");

        // Scale the residual so that theta * u lies in lambda K.
        double theta = 1.0;
        if (lambda_ == 0.0) {
            theta = 0.0;
        } else if (K_.is_bounded()) {
            const double gauge = polar_gauge(u, K_);
            if (gauge > lambda_) theta = lambda_ / gauge;
        }

        Certificate cert;
        const double h = lambda_ == 0.0 ? 0.0 : support_function(beta, K_);
        if (std::isinf(h)) {
            cert.duality_gap = kInfinity;
        } else {
            const double projected_residual = (fitted_response_ - x_beta).squaredNorm();
            const double gap =
                lambda_ * h - theta * u.dot(beta) + 0.5 * (1.0 - theta) * (1.0 - theta) * projected_residual;
            cert.duality_gap = std::max(0.0, gap);
        }
        cert.dual_feasibility_residual = lambda_ == 0.0 ? 0.0 : membership_check(u, K_, lambda_);
        cert.kkt_stationarity_residual = (beta - prox_penalty(beta + u, K_, lambda_)).norm();
        return cert;
    }

private:
    const RegressionProblem& problem_;
    const PenaltySpec& K_;
    double lambda_;
    Vector fitted_response_;
};

double smooth_loss(const RegressionProblem& problem, const Vector& x_beta)
{
    return 0.5 * (problem.response() - x_beta).squaredNorm();
}

}  // namespace

void SolverConfig::validate() const
{
    if (const auto* fixed = std::get_if<FixedStep>(&step_rule)) {
        if (!(fixed->alpha > 0.0) || !std::isfinite(fixed->alpha)) throw InvalidArgument("fixed step alpha must be positive");
    }
    if (const auto* bt = std::get_if<BacktrackingStep>(&step_rule)) {
        if (!(bt->shrink > 0.0 && bt->shrink < 1.0)) throw InvalidArgument("backtracking shrink factor must lie in (0, 1)");
    }
    if (!(tol_gap > 0.0)) throw InvalidArgument("tol_gap must be positive");
    if (!(tol_feasibility > 0.0)) throw InvalidArgument("tol_feasibility must be positive");
}

double spectral_norm_squared(const Matrix& X, int max_iter, double tol)
{
    const Index p = X.cols();
    // Deterministic start with no special alignment to coordinate axes.
    Vector v(p);
    for (Index j = 0; j < p; ++j) v[j] = 1.0 + static_cast<double>(j + 1) / static_cast<double>(p + 1);
    v.normalize();

    double estimate = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const Vector w = X.transpose() * (X * v);
        const double next = v.dot(w);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        if (std::abs(next - estimate) <= tol * std::abs(next)) return next;
        estimate = next;
    }
    return estimate;
}

Solution solve(const RegressionProblem& problem, const PenaltySpec& K, double lambda, const SolverConfig& config)
{
    config.validate();
    check_lambda(lambda);
    check_problem_penalty(problem, K);

    const Matrix& X = problem.design();
    const Vector& y = problem.response();
    const Index p = problem.features();
    const GapEvaluator gap(problem, K, lambda);

    double alpha = 1.0;
    const bool backtracking = std::holds_alternative<BacktrackingStep>(config.step_rule);
    double shrink = 0.5;
    if (const auto* fixed = std::get_if<FixedStep>(&config.step_rule)) {
        alpha = fixed->alpha;
    } else if (std::holds_alternative<InverseSpectralStep>(config.step_rule)) {
        const double lipschitz = spectral_norm_squared(X);
        alpha = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
    } else {
        shrink = std::get<BacktrackingStep>(config.step_rule).shrink;
    }

    Vector beta = Vector::Zero(p);
    Vector x_beta = Vector::Zero(problem.samples());
    if (lambda == 0.0) {
        // Plain least squares: start from the minimum-norm solution.
        beta = Eigen::CompleteOrthogonalDecomposition<Matrix>(X).solve(y);
        x_beta = X * beta;
    }
    Vector extrapolated = beta;
    double momentum = 1.0;

    Vector best_beta = beta;
    Certificate best_cert;
    std::size_t best_iter = 0;
    bool have_best = false;
    auto status = SolveStatus::max_iterations;
    std::size_t iter = 0;

    for (;; ++iter) {
        const Certificate cert = gap.at(beta, x_beta);
        if (!have_best || cert.duality_gap < best_cert.duality_gap) {
            best_beta = beta;
            best_cert = cert;
            best_iter = iter;
            have_best = true;
        }
        const double feasibility_limit = K.is_cone() ? config.tol_feasibility : kDualFeasibilityTolerance;
        if (cert.duality_gap <= config.tol_gap && cert.dual_feasibility_residual <= feasibility_limit) {
            best_beta = beta;
            best_cert = cert;
            best_iter = iter;
            status = SolveStatus::converged;
            break;
        }
        if (iter >= config.max_iter) break;

        const Vector x_point = config.accelerated ? Vector(X * extrapolated) : x_beta;
        const Vector gradient = X.transpose() * (x_point - y);

        if (!(extrapolated - alpha * gradient).allFinite()) {
            std::ostringstream msg;
            msg << "non-finite gradient step at iteration " << iter + 1 << " (step alpha = " << alpha << ")";
            throw NumericalError(msg.str());
        }
        Vector candidate = prox_penalty(extrapolated - alpha * gradient, K, lambda * alpha);
        if (backtracking) {
            const double f_point = smooth_loss(problem, x_point);
            for (int tries = 0;; ++tries) {
                const Vector step = candidate - extrapolated;
                const double upper = f_point + gradient.dot(step) + step.squaredNorm() / (2.0 * alpha);
                const double f_candidate = smooth_loss(problem, X * candidate);
                if (f_candidate <= upper + 1e-14 * std::abs(f_point)) break;
                if (tries >= 200) throw NumericalError("backtracking failed to find an admissible step");
                alpha *= shrink;
                candidate = prox_penalty(extrapolated - alpha * gradient, K, lambda * alpha);
            }
        }
        if (!candidate.allFinite()) {
            std::ostringstream msg;
            msg << "non-finite iterate at iteration " << iter + 1 << " (step alpha = " << alpha << ")";
            throw NumericalError(msg.str());
        }
        if (config.on_iterate) config.on_iterate(iter + 1, candidate);

        if (config.accelerated && (extrapolated - candidate).dot(candidate - beta) > 0.0) {
            // Adaptive restart: the momentum points uphill, so drop it.
            momentum = 1.0;
            extrapolated = candidate;
        } else if (config.accelerated) {
            const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            extrapolated = candidate + ((momentum - 1.0) / next) * (candidate - beta);
            momentum = next;
        } else {
            extrapolated = candidate;
        }
        beta = std::move(candidate);
        x_beta = X * beta;
    }

    Solution out;
    out.beta_hat = best_beta;
    out.mu_hat = X * best_beta;
    out.u_hat = X.transpose() * (y - out.mu_hat);
    out.lambda = lambda;
    out.objective = objective_value(problem, K, lambda, best_beta);
    out.duality_gap = best_cert.duality_gap;
    out.kkt_residual = best_cert.kkt_stationarity_residual;
    out.iterations = status == SolveStatus::converged ? best_iter : iter;
    out.status = status;
    return out;
}

Vector dual_vector(const RegressionProblem& problem, const Solution& solution)
{
    detail::require_dimension(solution.beta_hat.size(), problem.features(), "beta_hat");
    return problem.design().transpose() * (problem.response() - problem.design() * solution.beta_hat);
}

double duality_gap(const RegressionProblem& problem, const PenaltySpec& K, double lambda, const Vector& beta,
                   const Vector& u)
{
    check_lambda(lambda);
    check_problem_penalty(problem, K);
    detail::require_dimension(beta.size(), problem.features(), "beta");
    detail::require_dimension(u.size(), problem.features(), "u");
    detail::require_finite(u, "u");

    const Matrix& X = problem.design();
    const Vector& y = problem.response();

    const double scale = std::max(1.0, lambda);
    const double outside_k = membership_check(u, K, lambda);
    if (outside_k > kDualFeasibilityTolerance * scale) {
        std::ostringstream msg;
        msg << "dual vector violates u in lambda*K: distance " << outside_k;
        throw InfeasibleDual(msg.str());
    }

    // Within the tolerance, move u onto lambda K: a radial scaling for bounded K
    // keeps u in row(X); cones use the projection.
    Vector feasible = u;
    if (lambda == 0.0) {
        feasible.setZero();
    } else if (K.is_bounded()) {
        const double gauge = polar_gauge(u, K);
        if (gauge > lambda) feasible *= lambda / gauge;
    } else {
        feasible = project_scaled(u, K, lambda).point;
    }

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X.transpose());
    const Vector v = cod.solve(feasible);
    const double outside_row = (X.transpose() * v - feasible).norm();
    if (outside_row > kDualFeasibilityTolerance * std::max(1.0, u.norm())) {
        std::ostringstream msg;
        msg << "dual vector violates u in row(X): residual " << outside_row;
        throw InfeasibleDual(msg.str());
    }

    const double h = lambda == 0.0 ? 0.0 : support_function(beta, K);
    if (std::isinf(h)) return kInfinity;
    // With y_hat the projection of y onto col(X) and v the minimum-norm
    // solution of X'v = u, primal minus dual is
    //   lambda h(beta) - beta'u + 1/2 ||y_hat - X beta - v||^2,
    // which avoids cancelling terms of size ||y||^2.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod_x(X);
    const Vector y_hat = X * cod_x.solve(y);
    return lambda * h - beta.dot(feasible) + 0.5 * (y_hat - X * beta - v).squaredNorm();
}

Certificate certify(const RegressionProblem& problem, const PenaltySpec& K, double lambda, const Vector& beta)
{
    check_lambda(lambda);
    check_problem_penalty(problem, K);
    detail::require_dimension(beta.size(), problem.features(), "beta");
    detail::require_finite(beta, "beta");
    const GapEvaluator gap(problem, K, lambda);
    return gap.at(beta, problem.design() * beta);
}

namespace {

// Bounds of lambda K per coordinate for polyhedral K.
void coordinate_bounds(const PenaltySpec& K, double lambda, Vector& lower, Vector& upper)
{
    const Index p = K.dimension();
    lower.resize(p);
    upper.resize(p);
    if (const auto* box = std::get_if<PenaltySpec::Box>(&K.kind())) {
        upper = lambda * box->radii;
        lower = -upper;
        return;
    }
    const auto& cone = std::get<PenaltySpec::OrthantCone>(K.kind());
    for (Index j = 0; j < p; ++j) {
        switch (cone.signs[static_cast<std::size_t>(j)]) {
        case ConeSign::nonpositive: lower[j] = -kInfinity; upper[j] = 0.0; break;
        case ConeSign::nonnegative: lower[j] = 0.0; upper[j] = kInfinity; break;
        case ConeSign::free: lower[j] = -kInfinity; upper[j] = kInfinity; break;
        }
    }
}

// Active-set refinement of an approximate minimizer of 1/2 ||y - A u||^2 over
// a box: fix the coordinates sitting on a bound, solve for the rest exactly,
// and accept only if the result is feasible and satisfies the sign conditions.
bool polish_box_qp(const Matrix& A, const Vector& y, const Vector& lower, const Vector& upper, Vector& u)
{
    const Index p = u.size();
    const double scale = 1.0 + u.cwiseAbs().maxCoeff();
    const double bound_tol = 1e-8 * scale;

    std::vector<Index> free_idx;
    Vector fixed = Vector::Zero(p);
    for (Index j = 0; j < p; ++j) {
        if (std::isfinite(upper[j]) && u[j] >= upper[j] - bound_tol) {
            fixed[j] = upper[j];
        } else if (std::isfinite(lower[j]) && u[j] <= lower[j] + bound_tol) {
            fixed[j] = lower[j];
        } else {
            free_idx.push_back(j);
        }
    }

    Vector candidate = fixed;
    if (!free_idx.empty()) {
        Matrix a_free(A.rows(), static_cast<Index>(free_idx.size()));
        for (std::size_t k = 0; k < free_idx.size(); ++k) a_free.col(static_cast<Index>(k)) = A.col(free_idx[k]);
        const Vector rhs = y - A * fixed;
        const Vector sol = a_free.colPivHouseholderQr().solve(rhs);
        for (std::size_t k = 0; k < free_idx.size(); ++k) candidate[free_idx[k]] = sol[static_cast<Index>(k)];
    }

    const Vector grad = A.transpose() * (A * candidate - y);
    const double grad_tol = 1e-9 * (1.0 + grad.cwiseAbs().maxCoeff() + y.norm());
    for (Index j = 0; j < p; ++j) {
        if (candidate[j] > upper[j] + bound_tol || candidate[j] < lower[j] - bound_tol) return false;
        const bool at_upper = std::isfinite(upper[j]) && candidate[j] == upper[j];
        const bool at_lower = std::isfinite(lower[j]) && candidate[j] == lower[j];
        if (at_upper && grad[j] > grad_tol) return false;
        if (at_lower && grad[j] < -grad_tol) return false;
        if (!at_upper && !at_lower && std::abs(grad[j]) > grad_tol) return false;
    }
    u = candidate.cwiseMax(lower).cwiseMin(upper);
    return true;
}

}  // namespace

Vector residual_form_projection(const RegressionProblem& problem, const PenaltySpec& K, double lambda)
{
    check_lambda(lambda);
    check_problem_penalty(problem, K);
    const Matrix& X = problem.design();
    if (X.rows() != X.cols()) throw DimensionError("residual form needs a square design");

    Eigen::JacobiSVD<Matrix> svd(X);
    const auto& sv = svd.singularValues();
    const double s_max = sv[0];
    const double s_min = sv[sv.size() - 1];
    if (!(s_min > 1e-12 * s_max)) throw NumericalError("residual form needs an invertible design; X is singular");

    const Index n = X.rows();
    if (lambda == 0.0) return Vector::Zero(n);

    // r = X^{-T} u with u in lambda K.
    const Matrix A = X.inverse().transpose();
    const Vector& y = problem.response();
    const double lipschitz = 1.0 / (s_min * s_min);
    const double strong = 1.0 / (s_max * s_max);
    const double root_kappa = std::sqrt(lipschitz / strong);
    const double momentum = (root_kappa - 1.0) / (root_kappa + 1.0);

    Vector u = Vector::Zero(n);
    Vector u_prev = u;
    Vector z = u;
    const std::size_t max_iter = 2000000;
    for (std::size_t it = 0; it < max_iter; ++it) {
        const Vector grad = A.transpose() * (A * z - y);
        u_prev = u;
        u = project_scaled(z - grad / lipschitz, K, lambda).point;
        z = u + momentum * (u - u_prev);
        if ((u - u_prev).norm() <= 1e-15 * (1.0 + u.norm())) break;
    }

    if (K.is_polyhedral()) {
        Vector lower, upper;
        coordinate_bounds(K, lambda, lower, upper);
        polish_box_qp(A, y, lower, upper, u);
    }
    return A * u;
}

double residual_form_check(const RegressionProblem& problem, const PenaltySpec& K, double lambda,
                           const Solution& solution)
{
    detail::require_dimension(solution.beta_hat.size(), problem.features(), "beta_hat");
    const Vector projection = residual_form_projection(problem, K, lambda);
    return (problem.design() * solution.beta_hat - (problem.response() - projection)).norm();
}

ClassicalErrorBound classical_error_certificate(const RegressionProblem& problem, const Vector& beta0,
                                                const Vector& eps)
{
    const Matrix& X = problem.design();
    detail::require_dimension(beta0.size(), problem.features(), "beta0");
    detail::require_dimension(eps.size(), problem.samples(), "eps");
    detail::require_finite(beta0, "beta0");
    detail::require_finite(eps, "eps");

    const Matrix gram = X.transpose() * X;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lambda_min = eig.eigenvalues()[0];
    if (lambda_min <= 1e-12) {
        throw NumericalError("classical error bound needs full column rank: lambda_min(X'X) <= 1e-12");
    }

    const double score = (X.transpose() * eps).norm();
    const Vector beta_ls = X.colPivHouseholderQr().solve(problem.response());

    ClassicalErrorBound out;
    out.lambda_min = lambda_min;
    out.bound = 2.0 * score / lambda_min;
    out.actual_error = (beta_ls - beta0).norm();
    if (problem.sigma()) {
        out.zeta = std::sqrt(static_cast<double>(problem.samples()) / *problem.sigma()) * score / lambda_min;
    }
    return out;
}

MeanEstimate lambda_recommendation(const Matrix& X, const PenaltySpec& K, double sigma, double C1,
                                   const McOptions& mc)
{
    detail::require_dimension(K.dimension(), X.cols(), "penalty");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be nonnegative and finite");
    if (!(C1 > 0.0) || !std::isfinite(C1)) throw InvalidArgument("C1 must be positive");
    if (sigma == 0.0) return MeanEstimate{0.0, 0.0, mc.samples};

    const std::uint64_t key = derive_key(mc.seed, "lambda_recommendation");
    const auto est = mc_mean(mc.samples, mc.threads, [&](std::uint64_t i) {
        CounterStream rng(key, i);
        Vector g(X.rows());
        rng.fill_normal(g);
        const double h = polar_gauge(-(X.transpose() * g), K);
        if (std::isinf(h)) {
            throw InvalidArgument("polar gauge of K is unbounded on a sampled direction; K polar must be bounded");
        }
        return h;
    });
    const double factor = C1 * sigma;
    return MeanEstimate{factor * est.mean, factor * est.std_error, est.samples};
}

}  // namespace lsgeom
