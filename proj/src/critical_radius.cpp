#include "lsgeom/errors.hpp"
#include "lsgeom/geometry.hpp"

#include <cmath>
#include <sstream>

namespace lsgeom {

KernelSpec KernelSpec::cosine()
{
    KernelSpec k;
    k.name = "cosine";
    k.covariance = [](long double s, long double t) { return std::cos(s - t); };
    k.d_first = [](long double s, long double t) { return -std::sin(s - t); };
    k.d_mixed = [](long double s, long double t) { return std::cos(s - t); };
    return k;
}

KernelSpec KernelSpec::squared_exponential(double length_scale)
{
    if (!(length_scale > 0.0) || !std::isfinite(length_scale)) {
        throw InvalidArgument("length_scale must be positive and finite");
    }
    const long double l2 = static_cast<long double>(length_scale) * length_scale;
    KernelSpec k;
    k.name = "squared_exponential";
    k.covariance = [l2](long double s, long double t) { return std::exp(-(s - t) * (s - t) / (2 * l2)); };
    k.d_first = [l2](long double s, long double t) {
        return -(s - t) / l2 * std::exp(-(s - t) * (s - t) / (2 * l2));
    };
    k.d_mixed = [l2](long double s, long double t) {
        const long double d = s - t;
        return (1 / l2 - d * d / (l2 * l2)) * std::exp(-d * d / (2 * l2));
    };
    return k;
}

long double conditioned_second_moment(const KernelSpec& kernel, long double x, long double y)
{
    const long double lambda2 = kernel.d_mixed(x, x);
    if (!(lambda2 > 0)) {
        std::ostringstream msg;
        msg << "kernel " << kernel.name << " is not smooth at " << static_cast<double>(x)
            << ": second spectral moment " << static_cast<double>(lambda2) << " <= 0";
        throw InvalidArgument(msg.str());
    }
    const long double c = kernel.covariance(x, y);
    const long double one_minus_c = 1 - c;
    if (std::abs(one_minus_c) < 1e-12L) {
        std::ostringstream msg;
        msg << "points " << static_cast<double>(x) << " and " << static_cast<double>(y) << " are perfectly correlated";
        throw NumericalError(msg.str());
    }
    const long double dc = kernel.d_first(x, y);
    const long double variance = std::max(0.0L, 1 - c * c - dc * dc / lambda2);
    return variance / (one_minus_c * one_minus_c);
}

CriticalRadiusEstimate critical_radius_process(const KernelSpec& kernel, std::span<const double> grid,
                                               std::optional<double> delta)
{
    if (!kernel.covariance || !kernel.d_first || !kernel.d_mixed) {
        throw InvalidArgument("kernel must provide the covariance and its first and mixed derivatives");
    }
    if (!kernel.unit_variance) throw InvalidArgument("kernel must have unit variance");
    if (grid.empty()) throw InvalidArgument("grid must be non-empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw InvalidArgument("grid point " + std::to_string(i) + " is not finite");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidArgument("grid must be strictly increasing");
        const long double var = kernel.covariance(grid[i], grid[i]);
        if (std::abs(var - 1) > 1e-10L) {
            throw InvalidArgument("kernel variance at grid point " + std::to_string(grid[i]) + " is not 1");
        }
    }
    // Symmetry spot check at the ends and the middle.
    const std::size_t n = grid.size();
    for (std::size_t i : {std::size_t{0}, n / 2}) {
        const std::size_t j = n - 1 - i;
        if (std::abs(kernel.covariance(grid[i], grid[j]) - kernel.covariance(grid[j], grid[i])) > 1e-12L) {
            throw InvalidArgument("kernel covariance is not symmetric");
        }
    }

    CriticalRadiusEstimate out;
    if (delta) {
        if (!(*delta > 0.0) || !std::isfinite(*delta)) throw InvalidArgument("exclusion delta must be positive");
        out.delta = *delta;
    } else {
        out.delta = n > 1 ? 2.0 * (grid.back() - grid.front()) / static_cast<double>(n - 1) : 0.0;
    }
    const double threshold = out.delta * (1.0 - 1e-9);

    long double best = -1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || std::abs(grid[i] - grid[j]) < threshold) continue;
            ++out.admissible_pairs;
            const long double value = conditioned_second_moment(kernel, grid[i], grid[j]);
            if (value > best) {
                best = value;
                out.argmax_pair = std::make_pair(grid[i], grid[j]);
            }
        }
    }
    out.cot_sq = best > 0 ? static_cast<double>(best) : 0.0;
    out.r_c = std::atan2(1.0, std::sqrt(out.cot_sq));
    return out;
}

}  // namespace lsgeom
