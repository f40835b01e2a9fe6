#include "lsgeom/geometry.hpp"

#include "lsgeom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lsgeom {

namespace {

double cross(const Point2& a, const Point2& b) { return a.x() * b.y() - a.y() * b.x(); }

double segment_distance(const Point2& z, const Point2& a, const Point2& b)
{
    const Point2 ab = b - a;
    const double t = std::clamp((z - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    return (z - (a + t * ab)).norm();
}

}  // namespace

ConvexBody2D ConvexBody2D::polygon(std::vector<Point2> vertices)
{
    const std::size_t m = vertices.size();
    if (m < 3) throw InvalidArgument("polygon needs at least 3 vertices");
    for (const auto& v : vertices) {
        if (!v.allFinite()) throw InvalidArgument("polygon vertex is not finite");
    }
    double twice_area = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const Point2& a = vertices[i];
        const Point2& b = vertices[(i + 1) % m];
        const Point2& c = vertices[(i + 2) % m];
        if (!(cross(b - a, c - b) > 0.0)) {
            throw InvalidArgument("polygon must be strictly convex with counterclockwise vertices (turn at vertex " +
                                  std::to_string((i + 1) % m) + ")");
        }
        twice_area += cross(a, b);
    }
    if (!(twice_area > 0.0)) throw InvalidArgument("polygon has non-positive area");
    // A star polygon also turns left at every vertex; its winding exceeds one turn.
    double turning = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const Point2 e1 = vertices[(i + 1) % m] - vertices[i];
        const Point2 e2 = vertices[(i + 2) % m] - vertices[(i + 1) % m];
        turning += std::atan2(cross(e1, e2), e1.dot(e2));
    }
    if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6) throw InvalidArgument("polygon is self-intersecting");
    return ConvexBody2D(Polygon{std::move(vertices)});
}

ConvexBody2D ConvexBody2D::disk(double radius, Point2 center)
{
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("disk radius must be positive and finite");
    if (!center.allFinite()) throw InvalidArgument("disk center is not finite");
    return ConvexBody2D(Disk{center, radius});
}

ConvexBody2D ConvexBody2D::unit_square()
{
    return polygon({Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)});
}

double ConvexBody2D::support(const Point2& direction) const
{
    if (const auto* d = std::get_if<Disk>(&shape_)) return d->center.dot(direction) + d->radius * direction.norm();
    const auto& verts = std::get<Polygon>(shape_).vertices;
    double best = -kInfinity;
    for (const auto& v : verts) best = std::max(best, v.dot(direction));
    return best;
}

double ConvexBody2D::distance(const Point2& z) const
{
    if (const auto* d = std::get_if<Disk>(&shape_)) return std::max(0.0, (z - d->center).norm() - d->radius);
    const auto& verts = std::get<Polygon>(shape_).vertices;
    const std::size_t m = verts.size();
    bool inside = true;
    for (std::size_t i = 0; i < m && inside; ++i) {
        if (cross(verts[(i + 1) % m] - verts[i], z - verts[i]) < 0.0) inside = false;
    }
    if (inside) return 0.0;
    double best = kInfinity;
    for (std::size_t i = 0; i < m; ++i) best = std::min(best, segment_distance(z, verts[i], verts[(i + 1) % m]));
    return best;
}

double ConvexBody2D::area() const
{
    if (const auto* d = std::get_if<Disk>(&shape_)) return std::numbers::pi * d->radius * d->radius;
    const auto& verts = std::get<Polygon>(shape_).vertices;
    double twice = 0.0;
    for (std::size_t i = 0; i < verts.size(); ++i) twice += cross(verts[i], verts[(i + 1) % verts.size()]);
    return 0.5 * twice;
}

double ConvexBody2D::perimeter() const
{
    if (const auto* d = std::get_if<Disk>(&shape_)) return 2.0 * std::numbers::pi * d->radius;
    const auto& verts = std::get<Polygon>(shape_).vertices;
    double total = 0.0;
    for (std::size_t i = 0; i < verts.size(); ++i) total += (verts[(i + 1) % verts.size()] - verts[i]).norm();
    return total;
}

std::pair<Point2, Point2> ConvexBody2D::bounding_box() const
{
    if (const auto* d = std::get_if<Disk>(&shape_)) {
        const Point2 r(d->radius, d->radius);
        return {d->center - r, d->center + r};
    }
    const auto& verts = std::get<Polygon>(shape_).vertices;
    Point2 lo = verts.front();
    Point2 hi = verts.front();
    for (const auto& v : verts) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return {lo, hi};
}

IntrinsicVolumeEstimate exact_intrinsic_volumes(const ConvexBody2D& body)
{
    IntrinsicVolumeEstimate out;
    out.values = Vector(3);
    out.values << 1.0, 0.5 * body.perimeter(), body.area();
    out.std_errors = Vector::Zero(3);
    out.method = IntrinsicVolumeMethod::exact_2d;
    return out;
}

TubeVolume tube_volume_mc(const ConvexBody2D& body, double r, const McOptions& mc)
{
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("tube radius r must be positive and finite");
    if (mc.samples < 2) throw InvalidArgument("mc_samples must be at least 2");
    auto [lo, hi] = body.bounding_box();
    lo.array() -= r;
    hi.array() += r;
    const Point2 extent = hi - lo;
    const double box_area = extent.x() * extent.y();
    const std::uint64_t key = derive_key(mc.seed, "tube_volume");

    const MeanEstimate hit = mc_mean(mc.samples, mc.threads, [&](std::uint64_t i) {
        CounterStream rng(key, i);
        const double ux = rng.uniform();
        const double uy = rng.uniform();
        const Point2 z(lo.x() + ux * extent.x(), lo.y() + uy * extent.y());
        return body.distance(z) <= r ? 1.0 : 0.0;
    });
    return {box_area * hit.mean, box_area * hit.std_error};
}

IntrinsicVolumeEstimate steiner_fit(const ConvexBody2D& body, std::span<const double> radii, const McOptions& mc)
{
    std::vector<double> sorted(radii.begin(), radii.end());
    std::sort(sorted.begin(), sorted.end());
    std::size_t distinct = sorted.empty() ? 0 : 1;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] - sorted[i - 1] > 1e-6 * sorted[i]) ++distinct;
    }
    if (distinct < 3) {
        throw NumericalError("Steiner fit is ill-conditioned: need at least 3 distinct radii, got " +
                             std::to_string(distinct));
    }

    const auto m = static_cast<Index>(radii.size());
    Matrix design(m, 3);
    Vector volume(m);
    Vector weight(m);
    const std::uint64_t key = derive_key(mc.seed, "steiner_fit");
    for (Index i = 0; i < m; ++i) {
        const double r = radii[static_cast<std::size_t>(i)];
        McOptions sub = mc;
        sub.seed = child_key(key, static_cast<std::uint64_t>(i));
        const TubeVolume tv = tube_volume_mc(body, r, sub);
        // Columns multiply L_0, L_1, L_2.
        design(i, 0) = kOmega2D[2] * r * r;
        design(i, 1) = kOmega2D[1] * r;
        design(i, 2) = kOmega2D[0];
        volume[i] = tv.volume;
        weight[i] = tv.std_error > 0.0 ? 1.0 / tv.std_error : 1.0;
    }

    const Matrix weighted = weight.asDiagonal() * design;
    const Eigen::JacobiSVD<Matrix> svd(weighted, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!(sv[2] > 0.0) || sv[0] / sv[2] > 1e10) {
        throw NumericalError("Steiner fit is ill-conditioned: condition number " + std::to_string(sv[0] / sv[2]));
    }

    IntrinsicVolumeEstimate out;
    out.method = IntrinsicVolumeMethod::steiner_fit;
    out.values = svd.solve(weight.asDiagonal() * volume);
    // Covariance (A'WA)^{-1} = V S^{-2} V'.
    const Matrix cov = svd.matrixV() * sv.cwiseInverse().cwiseAbs2().asDiagonal() * svd.matrixV().transpose();
    out.std_errors = cov.diagonal().cwiseSqrt();
    return out;
}

}  // namespace lsgeom
