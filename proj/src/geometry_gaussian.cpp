#include "lsgeom/geometry.hpp"

#include "lsgeom/errors.hpp"
#include "lsgeom/projection.hpp"

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lsgeom {

namespace {

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

GaussianWidth finish_width(const MeanEstimate& m)
{
    GaussianWidth out;
    out.mean = m.mean;
    out.std_error = m.std_error;
    out.intrinsic_volume_1 = kSqrt2Pi * m.mean;
    out.intrinsic_volume_1_std_error = kSqrt2Pi * m.std_error;
    return out;
}

void require_samples(const McOptions& mc)
{
    if (mc.samples < 2) throw InvalidArgument("mc_samples must be at least 2");
}

/// Volume of the unit ball in R^k.
double unit_ball_volume(int k)
{
    return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

/// L_i of the unit sphere S^m.
double sphere_intrinsic_volume(int m, int i)
{
    if (i > m || (m - i) % 2 != 0) return 0.0;
    return 2.0 * boost::math::binomial_coefficient<double>(static_cast<unsigned>(m + 1), static_cast<unsigned>(i)) *
           unit_ball_volume(m + 1) / unit_ball_volume(m + 1 - i);
}

void require_simplex(std::span<const double> weights)
{
    if (weights.empty()) throw InvalidArgument("weights must be non-empty");
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < -1e-12) throw InvalidArgument("weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-6) {
        throw InvalidArgument("weights must sum to 1 (sum is " + std::to_string(total) + ")");
    }
}

}  // namespace

GaussianWidth gaussian_width(const PenaltySpec& K, const McOptions& mc)
{
    if (!K.is_bounded()) throw InvalidArgument("Gaussian width needs a bounded set; cone penalties are unbounded");
    require_samples(mc);
    const std::uint64_t key = derive_key(mc.seed, "gaussian_width");
    return finish_width(mc_mean(mc.samples, mc.threads, [&](std::uint64_t i) {
        CounterStream rng(key, i);
        Vector g(K.dimension());
        rng.fill_normal(g);
        return support_function(g, K);
    }));
}

GaussianWidth gaussian_width(const ConvexBody2D& body, const McOptions& mc)
{
    require_samples(mc);
    const std::uint64_t key = derive_key(mc.seed, "gaussian_width");
    return finish_width(mc_mean(mc.samples, mc.threads, [&](std::uint64_t i) {
        CounterStream rng(key, i);
        Point2 g;
        rng.fill_normal(g);
        return body.support(g);
    }));
}

GaussianWidth gaussian_width(const Matrix& points, const McOptions& mc)
{
    if (points.cols() == 0 || points.rows() == 0) throw InvalidArgument("point cloud must be non-empty");
    if (!points.allFinite()) throw InvalidArgument("point cloud contains non-finite entries");
    require_samples(mc);
    const std::uint64_t key = derive_key(mc.seed, "gaussian_width");
    return finish_width(mc_mean(mc.samples, mc.threads, [&](std::uint64_t i) {
        CounterStream rng(key, i);
        Vector g(points.rows());
        rng.fill_normal(g);
        return (points.transpose() * g).maxCoeff();
    }));
}

double hermite(int j, double u)
{
    if (j < 0) return 0.0;
    double prev = 1.0;
    if (j == 0) return prev;
    double cur = u;
    for (int k = 1; k < j; ++k) {
        const double next = u * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double ec_density(int j, double u)
{
    if (j < 0) throw InvalidArgument("EC density index j must be nonnegative");
    if (j == 0) return 0.5 * std::erfc(u / std::numbers::sqrt2);
    return std::pow(2.0 * std::numbers::pi, -0.5 * (j + 1)) * hermite(j - 1, u) * std::exp(-0.5 * u * u);
}

double sup_tail_approx(std::span<const double> intrinsic_volumes, double u)
{
    double total = 0.0;
    for (std::size_t j = 0; j < intrinsic_volumes.size(); ++j) {
        const double l = intrinsic_volumes[j];
        if (!std::isfinite(l) || l < 0.0) {
            throw InvalidArgument("intrinsic volume L_" + std::to_string(j) + " must be nonnegative and finite");
        }
        if (l != 0.0) total += l * ec_density(static_cast<int>(j), u);
    }
    return total;
}

double chi_bar_tail(std::span<const double> weights, double u)
{
    require_simplex(weights);
    if (u < 0.0) return 1.0;
    double total = 0.0;
    for (std::size_t j = 1; j < weights.size(); ++j) {
        if (weights[j] == 0.0) continue;
        total += weights[j] * (u == 0.0 ? 1.0 : boost::math::gamma_q(0.5 * static_cast<double>(j), 0.5 * u * u));
    }
    return std::clamp(total, 0.0, 1.0);
}

double chi_bar_mean(std::span<const double> weights)
{
    require_simplex(weights);
    double total = 0.0;
    for (std::size_t j = 1; j < weights.size(); ++j) {
        const double dof = static_cast<double>(j);
        total += weights[j] * std::numbers::sqrt2 * std::exp(std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof));
    }
    return total;
}

Vector spherical_intrinsic_volumes(std::span<const double> conic_weights)
{
    require_simplex(conic_weights);
    const int d = static_cast<int>(conic_weights.size()) - 1;
    Vector out = Vector::Zero(std::max(d, 1));
    // A j-face of the cone meets the sphere in a piece of S^{j-1}.
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j <= d; ++j) out[i] += conic_weights[static_cast<std::size_t>(j)] * sphere_intrinsic_volume(j - 1, i);
    }
    return out;
}

ConeDescriptor ConeDescriptor::orthant(std::vector<ConeSign> signs)
{
    if (signs.empty()) throw InvalidArgument("orthant cone needs at least one coordinate");
    const auto d = static_cast<Index>(signs.size());
    PenaltySpec penalty = PenaltySpec::orthant_cone(signs);
    return ConeDescriptor(std::move(signs), d, std::move(penalty));
}

ConeDescriptor ConeDescriptor::from_penalty(const PenaltySpec& K)
{
    const auto* cone = std::get_if<PenaltySpec::OrthantCone>(&K.kind());
    if (cone == nullptr) throw InvalidArgument("penalty " + K.describe() + " is not a cone");
    return orthant(cone->signs);
}

ConeDescriptor ConeDescriptor::subspace(const Matrix& basis)
{
    if (basis.rows() == 0) throw InvalidArgument("subspace basis needs a positive ambient dimension");
    if (!basis.allFinite()) throw InvalidArgument("subspace basis contains non-finite entries");
    const Eigen::ColPivHouseholderQR<Matrix> qr(basis);
    const Index rank = qr.rank();
    const Matrix q = Matrix(qr.householderQ()).leftCols(rank);
    return ConeDescriptor(Subspace{q}, basis.rows(), std::nullopt);
}

std::pair<Vector, Index> ConeDescriptor::project(const Vector& v) const
{
    detail::require_dimension(v.size(), dimension_, "v");
    if (const auto* s = std::get_if<Subspace>(&kind_)) {
        const Matrix& q = s->orthonormal_basis;
        return {q * (q.transpose() * v), q.cols()};
    }
    ProjectionResult p = project_scaled(v, *penalty_, 1.0);
    return {std::move(p.point), *p.face_dimension};
}

Vector ConeDescriptor::exact_weights() const
{
    Vector w = Vector::Zero(dimension_ + 1);
    if (const auto* s = std::get_if<Subspace>(&kind_)) {
        w[s->orthonormal_basis.cols()] = 1.0;
        return w;
    }
    const auto& signs = std::get<std::vector<ConeSign>>(kind_);
    const auto free = static_cast<Index>(std::count(signs.begin(), signs.end(), ConeSign::free));
    const Index restricted = dimension_ - free;
    // Each restricted coordinate lands in the interior with probability 1/2.
    for (Index k = 0; k <= restricted; ++k) {
        w[free + k] = boost::math::binomial_coefficient<double>(static_cast<unsigned>(restricted), static_cast<unsigned>(k)) *
                      std::ldexp(1.0, -static_cast<int>(restricted));
    }
    return w;
}

IntrinsicVolumeEstimate conic_intrinsic_volumes(const ConeDescriptor& cone, const McOptions& mc)
{
    require_samples(mc);
    const Index d = cone.ambient_dimension();
    const std::uint64_t key = derive_key(mc.seed, "conic_intrinsic_volumes");
    const auto moments = mc_moments(mc.samples, mc.threads, static_cast<std::size_t>(d + 1),
                                    [&](std::uint64_t i, std::span<double> out) {
                                        CounterStream rng(key, i);
                                        Vector g(d);
                                        rng.fill_normal(g);
                                        std::fill(out.begin(), out.end(), 0.0);
                                        out[static_cast<std::size_t>(cone.project(g).second)] = 1.0;
                                    });
    IntrinsicVolumeEstimate est;
    est.method = IntrinsicVolumeMethod::conic_mc;
    est.values.resize(d + 1);
    est.std_errors.resize(d + 1);
    for (Index j = 0; j <= d; ++j) {
        est.values[j] = moments[static_cast<std::size_t>(j)].mean;
        est.std_errors[j] = moments[static_cast<std::size_t>(j)].std_error;
    }
    return est;
}

SupTailValidation sup_mc_validate(const ConeDescriptor& cone, double u, const McOptions& mc)
{
    if (!(u > 0.0) || !std::isfinite(u)) throw InvalidArgument("threshold u must be positive and finite");
    require_samples(mc);
    const Index d = cone.ambient_dimension();
    const std::uint64_t key = derive_key(mc.seed, "sup_mc_validate");
    const MeanEstimate tail = mc_mean(mc.samples, mc.threads, [&](std::uint64_t i) {
        CounterStream rng(key, i);
        Vector g(d);
        rng.fill_normal(g);
        return cone.project(g).first.norm() > u ? 1.0 : 0.0;
    });
    const Vector weights = cone.exact_weights();
    const Vector lkc = spherical_intrinsic_volumes(std::span<const double>(weights.data(), static_cast<std::size_t>(weights.size())));

    SupTailValidation out;
    out.empirical = tail.mean;
    out.std_error = tail.std_error;
    out.approx = sup_tail_approx(std::span<const double>(lkc.data(), static_cast<std::size_t>(lkc.size())), u);
    out.gap = out.empirical - out.approx;
    return out;
}

}  // namespace lsgeom
