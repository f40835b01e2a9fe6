#include "lsgeom/path_inference.hpp"

#include "lsgeom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lsgeom {

double LassoPath::lambda_floor() const
{
    if (segments.empty()) return 0.0;
    return segments.back().lambda_lower;
}

Vector LassoPath::coefficients(double lambda) const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be nonnegative and finite");
    if (knots.empty() || lambda >= knots.front()) return Vector::Zero(dimension);
    if (lambda < lambda_floor()) {
        std::ostringstream msg;
        msg << "lambda " << lambda << " is below the computed path (floor " << lambda_floor() << ")";
        throw InvalidArgument(msg.str());
    }
    // Knots decrease; find the first segment whose lower end is <= lambda.
    const auto it = std::find_if(segments.begin(), segments.end(),
                                 [&](const PathSegment& s) { return lambda >= s.lambda_lower; });
    return it->intercept + lambda * it->slope;
}

namespace {

struct Candidate {
    double lambda = -1.0;
    PathEventKind kind = PathEventKind::add;
    Index variable = -1;
    int sign = 0;
};

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

}  // namespace

LassoPath lasso_path(const Matrix& X, const Vector& y, std::size_t max_steps)
{
    detail::require_dimension(y.size(), X.rows(), "response");
    if (!X.allFinite()) throw InvalidArgument("design contains non-finite entries");
    detail::require_finite(y, "response");
    if (max_steps < 1) throw InvalidArgument("max_steps must be at least 1");
    const Index p = X.cols();
    for (Index j = 0; j < p; ++j) {
        if (X.col(j).squaredNorm() == 0.0) throw InvalidArgument("column " + std::to_string(j) + " of X is zero");
    }

    LassoPath path;
    path.dimension = p;

    const Vector corr = X.transpose() * y;
    const double lambda_max = corr.cwiseAbs().maxCoeff();
    if (lambda_max == 0.0) {
        path.complete = true;
        return path;
    }
    const double tie_tol = kKnotTieTolerance * lambda_max;

    Index first = 0;
    corr.cwiseAbs().maxCoeff(&first);  // lowest index among maximizers
    for (Index j = first + 1; j < p; ++j) {
        if (std::abs(corr[j]) >= lambda_max - tie_tol) {
            std::ostringstream msg;
            msg << "tie at knot 1: columns " << first << " and " << j
                << " enter together; keeping the lowest index";
            path.warnings.push_back(msg.str());
            break;
        }
    }

    std::vector<Index> active{first};
    std::vector<int> signs{sign_of(corr[first])};
    path.knots.push_back(lambda_max);
    path.events.push_back({PathEventKind::add, first});
    path.active_sets.push_back(active);
    path.signs.push_back(signs);

    double lambda = lambda_max;
    Index last_added = first;
    Index last_dropped = -1;
    int last_dropped_sign = 0;

    for (;;) {
        const auto m = static_cast<Index>(active.size());
        Matrix x_active(X.rows(), m);
        Vector s_active(m);
        for (Index i = 0; i < m; ++i) {
            x_active.col(i) = X.col(active[static_cast<std::size_t>(i)]);
            s_active[i] = signs[static_cast<std::size_t>(i)];
        }
        const auto qr = x_active.colPivHouseholderQr();
        if (qr.rank() < m) {
            throw PathError("rank-deficient active block at step " + std::to_string(path.knots.size()) + " (" +
                            std::to_string(m) + " active columns, rank " + std::to_string(qr.rank()) + ")");
        }
        // beta_A(lambda) = a - lambda b on this segment.
        const Vector a = qr.solve(y);
        const Vector b = (x_active.transpose() * x_active).ldlt().solve(s_active);
        const Vector base_residual = y - x_active * a;
        const Vector direction = x_active * b;

        std::vector<Candidate> candidates;
        std::vector<bool> is_active(static_cast<std::size_t>(p), false);
        for (Index j : active) is_active[static_cast<std::size_t>(j)] = true;

        for (Index j = 0; j < p; ++j) {
            if (is_active[static_cast<std::size_t>(j)]) continue;
            const double e = X.col(j).dot(base_residual);
            const double f = X.col(j).dot(direction);
            // c_j(l) = e + l f meets +l or -l.
            for (int s : {1, -1}) {
                if (j == last_dropped && s == last_dropped_sign) continue;
                const double denom = static_cast<double>(s) - f;
                if (denom == 0.0) continue;
                const double l = e / denom;
                if (l > 0.0 && l < lambda - tie_tol) candidates.push_back({l, PathEventKind::add, j, s});
            }
        }
        for (Index i = 0; i < m; ++i) {
            const Index j = active[static_cast<std::size_t>(i)];
            if (j == last_added || b[i] == 0.0) continue;
            const double l = a[i] / b[i];
            if (l > 0.0 && l < lambda - tie_tol) candidates.push_back({l, PathEventKind::drop, j, 0});
        }

        Candidate next;
        for (const auto& c : candidates) {
            if (c.lambda > next.lambda) next = c;
        }
        if (next.variable >= 0) {
            // Among events within tie tolerance of the largest, keep the lowest column.
            int tied = 0;
            const double top = next.lambda;
            for (const auto& c : candidates) {
                if (c.lambda >= top - tie_tol) {
                    ++tied;
                    if (c.variable < next.variable) next = c;
                }
            }
            if (tied > 1) {
                std::ostringstream msg;
                msg << "tie at knot " << path.knots.size() + 1 << " (lambda " << next.lambda << "): " << tied
                    << " events coincide; keeping column " << next.variable;
                path.warnings.push_back(msg.str());
            }
        }
        const double lower = next.variable >= 0 ? next.lambda : 0.0;

        PathSegment seg;
        seg.lambda_upper = lambda;
        seg.lambda_lower = lower;
        seg.intercept = Vector::Zero(p);
        seg.slope = Vector::Zero(p);
        for (Index i = 0; i < m; ++i) {
            seg.intercept[active[static_cast<std::size_t>(i)]] = a[i];
            seg.slope[active[static_cast<std::size_t>(i)]] = -b[i];
        }
        path.segments.push_back(std::move(seg));

        if (next.variable < 0) {
            path.complete = true;
            break;
        }
        if (path.knots.size() >= max_steps) break;

        if (next.kind == PathEventKind::add) {
            active.push_back(next.variable);
            signs.push_back(next.sign);
            last_added = next.variable;
            last_dropped = -1;
        } else {
            const auto pos = std::find(active.begin(), active.end(), next.variable) - active.begin();
            last_dropped_sign = signs[static_cast<std::size_t>(pos)];
            active.erase(active.begin() + pos);
            signs.erase(signs.begin() + pos);
            last_dropped = next.variable;
            last_added = -1;
        }
        path.knots.push_back(next.lambda);
        path.events.push_back({next.kind, next.variable});
        path.active_sets.push_back(active);
        path.signs.push_back(signs);
        lambda = next.lambda;

        if (active.empty()) throw PathError("active set emptied at knot " + std::to_string(path.knots.size()));
    }
    return path;
}

CovTestResult covariance_statistic(const LassoPath& path, const Matrix& X, const Vector& y, std::size_t k,
                                   double sigma_sq)
{
    if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) throw InvalidArgument("sigma_sq must be positive");
    if (path.knots.empty()) throw InvalidArgument("covariance statistic undefined: the path has no knots");
    if (k < 1 || k + 1 > path.knots.size()) {
        throw InvalidArgument("step k = " + std::to_string(k) + " needs " + std::to_string(k + 1) +
                              " knots; path has " + std::to_string(path.knots.size()));
    }
    detail::require_dimension(y.size(), X.rows(), "response");
    detail::require_dimension(X.cols(), path.dimension, "design");

    const double lambda_next = path.knots[k];
    const Vector beta = path.coefficients(lambda_next);
    const double full_term = y.dot(X * beta);

    double refit_term = 0.0;
    if (k >= 2) {
        const auto& active = path.active_sets[k - 2];
        if (!active.empty()) {
            Matrix x_active(X.rows(), static_cast<Index>(active.size()));
            for (std::size_t i = 0; i < active.size(); ++i) x_active.col(static_cast<Index>(i)) = X.col(active[i]);
            const LassoPath refit = lasso_path(x_active, y, 64 * (active.size() + 1));
            if (lambda_next < refit.lambda_floor()) throw PathError("refit path on the active set did not reach lambda_{k+1}");
            refit_term = y.dot(x_active * refit.coefficients(lambda_next));
        }
    }

    CovTestResult out;
    out.k = k;
    out.sigma_sq = sigma_sq;
    out.statistic = (full_term - refit_term) / sigma_sq;
    out.p_value = std::exp(-out.statistic);
    return out;
}

double covariance_statistic_knot_form(const LassoPath& path, std::size_t k, double sigma_sq)
{
    if (!(sigma_sq > 0.0)) throw InvalidArgument("sigma_sq must be positive");
    if (k < 1 || k + 1 > path.knots.size()) throw InvalidArgument("step k beyond path length");
    const double lk = path.knots[k - 1];
    return lk * (lk - path.knots[k]) / sigma_sq;
}

double ks_distance_exp1(std::vector<double> sample)
{
    if (sample.empty()) throw InvalidArgument("KS distance of an empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = sample[i] > 0.0 ? -std::expm1(-sample[i]) : 0.0;
        d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    return d;
}

double NullCalibration::empirical_cdf(double t) const
{
    if (sorted.empty()) return 0.0;
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    return static_cast<double>(count) / static_cast<double>(sorted.size());
}

NullCalibration null_calibration(const Matrix& X, double sigma, std::size_t k, const McOptions& mc)
{
    if (mc.samples < 100) throw InvalidArgument("null calibration needs at least 100 replicates");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be positive");
    if (k < 1) throw InvalidArgument("step k must be at least 1");

    const auto reps = static_cast<std::size_t>(mc.samples);
    const std::uint64_t key = derive_key(mc.seed, "null_calibration");
    std::vector<double> stats(reps);
    std::vector<std::size_t> retries(reps, 0);

    parallel_for(reps, mc.threads, [&](std::size_t r) {
        const std::uint64_t rep_key = child_key(key, r);
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt >= 1000) throw NumericalError("null calibration: 1000 degenerate draws in a row");
            CounterStream rng(rep_key, attempt);
            Vector y(X.rows());
            rng.fill_normal(y);
            y *= sigma;
            try {
                const LassoPath path = lasso_path(X, y, k + 1);
                if (path.knots.size() < k + 1) {
                    ++retries[r];
                    continue;
                }
                stats[r] = covariance_statistic(path, X, y, k, sigma * sigma).statistic;
                return;
            } catch (const PathError&) {
                ++retries[r];
            }
        }
    });

    NullCalibration out;
    out.statistics = stats;
    out.sorted = stats;
    std::sort(out.sorted.begin(), out.sorted.end());
    out.resampled = std::accumulate(retries.begin(), retries.end(), std::size_t{0});
    out.ks_distance = ks_distance_exp1(stats);

    const double n = static_cast<double>(reps);
    double mean = 0.0;
    for (double t : stats) mean += t;
    mean /= n;
    double ss = 0.0;
    for (double t : stats) ss += (t - mean) * (t - mean);
    out.mean = mean;
    out.std_error = std::sqrt(ss / (n - 1.0) / n);
    return out;
}

}  // namespace lsgeom
