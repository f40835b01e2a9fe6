#include "lsgeom/projection.hpp"

#include "lsgeom/errors.hpp"

#include <algorithm>
#include <cmath>

namespace lsgeom {

namespace {

void check_scale(double t)
{
    if (!std::isfinite(t)) throw InvalidArgument("projection scale t must be finite");
    if (t < 0.0) throw InvalidArgument("projection scale t must be nonnegative");
}

ProjectionResult project_box(const Vector& v, const Vector& radii, double t)
{
    ProjectionResult out;
    out.point.resize(v.size());
    Index interior = 0;
    for (Index j = 0; j < v.size(); ++j) {
        const double bound = t * radii[j];
        out.point[j] = std::clamp(v[j], -bound, bound);
        if (std::abs(out.point[j]) < bound - kFaceTolerance) ++interior;
    }
    out.face_dimension = interior;
    return out;
}

ProjectionResult project_l2(const Vector& v, const PenaltySpec::ProductL2Balls& k, double t)
{
    ProjectionResult out;
    out.point = v;
    for (std::size_t g = 0; g < k.groups.size(); ++g) {
        double sq = 0.0;
        for (Index j : k.groups[g]) sq += v[j] * v[j];
        const double norm = std::sqrt(sq);
        const double radius = t * k.radii[static_cast<Index>(g)];
        if (norm > radius) {
            const double scale = norm > 0.0 ? radius / norm : 0.0;
            for (Index j : k.groups[g]) out.point[j] = v[j] * scale;
        }
    }
    return out;
}

ProjectionResult project_cone(const Vector& v, const std::vector<ConeSign>& signs, double t)
{
    ProjectionResult out;
    out.point.resize(v.size());
    Index dim = 0;
    for (Index j = 0; j < v.size(); ++j) {
        double x = v[j];
        if (t == 0.0) {
            x = 0.0;
        } else {
            switch (signs[static_cast<std::size_t>(j)]) {
            case ConeSign::nonpositive: x = std::min(x, 0.0); break;
            case ConeSign::nonnegative: x = std::max(x, 0.0); break;
            case ConeSign::free: break;
            }
        }
        out.point[j] = x;
        const bool restricted = signs[static_cast<std::size_t>(j)] != ConeSign::free;
        if (t > 0.0 && (!restricted || std::abs(x) > kFaceTolerance)) ++dim;
    }
    out.face_dimension = dim;
    return out;
}

}  // namespace

ProjectionResult project_scaled(const Vector& v, const PenaltySpec& K, double t)
{
    detail::require_dimension(v.size(), K.dimension(), "v");
    check_scale(t);
    detail::require_finite(v, "v");

    ProjectionResult out = std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, PenaltySpec::Box>) {
                return project_box(v, k.radii, t);
            } else if constexpr (std::is_same_v<T, PenaltySpec::ProductL2Balls>) {
                return project_l2(v, k, t);
            } else {
                return project_cone(v, k.signs, t);
            }
        },
        K.kind());
    out.distance = (v - out.point).norm();
    return out;
}

Vector prox_penalty(const Vector& v, const PenaltySpec& K, double t)
{
    return v - project_scaled(v, K, t).point;
}

double membership_check(const Vector& v, const PenaltySpec& K, double t)
{
    return project_scaled(v, K, t).distance;
}

}  // namespace lsgeom
