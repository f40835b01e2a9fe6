#pragma once

#include "lsgeom/core_model.hpp"
#include "lsgeom/random.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace lsgeom {

// ---------------------------------------------------------------------------
// Planar convex bodies
// ---------------------------------------------------------------------------

using Point2 = Eigen::Vector2d;

/// Convex polygon (vertices counterclockwise) or disk.
class ConvexBody2D {
public:
    struct Polygon {
        std::vector<Point2> vertices;
    };
    struct Disk {
        Point2 center;
        double radius;
    };

    /// Throws InvalidArgument unless the vertices are counterclockwise, strictly convex and span positive area.
    static ConvexBody2D polygon(std::vector<Point2> vertices);
    static ConvexBody2D disk(double radius, Point2 center = Point2::Zero());
    /// [0, 1]^2
    static ConvexBody2D unit_square();

    const std::variant<Polygon, Disk>& shape() const noexcept { return shape_; }

    double support(const Point2& direction) const;
    /// Euclidean distance from z to the body (0 inside).
    double distance(const Point2& z) const;
    double area() const;
    double perimeter() const;
    /// Lower-left and upper-right corners of the axis-aligned bounding box.
    std::pair<Point2, Point2> bounding_box() const;

private:
    explicit ConvexBody2D(std::variant<Polygon, Disk> shape) : shape_(std::move(shape)) {}
    std::variant<Polygon, Disk> shape_;
};

enum class IntrinsicVolumeMethod { steiner_fit, conic_mc, exact_2d };

/// L_0..L_d with standard errors (zero for exact values).
struct IntrinsicVolumeEstimate {
    Vector values;
    Vector std_errors;
    IntrinsicVolumeMethod method = IntrinsicVolumeMethod::exact_2d;
};

/// Unit-ball volumes omega_0 = 1, omega_1 = 2, omega_2 = pi used by the planar Steiner formula.
inline constexpr double kOmega2D[3] = {1.0, 2.0, 3.14159265358979323846};

/// (1, perimeter / 2, area).
IntrinsicVolumeEstimate exact_intrinsic_volumes(const ConvexBody2D& body);

struct TubeVolume {
    double volume = 0.0;
    double std_error = 0.0;
};

/// Area of {z : dist(z, body) <= r} by uniform sampling of the r-padded bounding box.
TubeVolume tube_volume_mc(const ConvexBody2D& body, double r, const McOptions& mc);

/// Weighted least-squares fit of tube areas to L_2 + 2 r L_1 + pi r^2 L_0.
/// Needs at least three radii that differ by more than one part in 1e6.
IntrinsicVolumeEstimate steiner_fit(const ConvexBody2D& body, std::span<const double> radii, const McOptions& mc);

// ---------------------------------------------------------------------------
// Gaussian widths
// ---------------------------------------------------------------------------

struct GaussianWidth {
    double mean = 0.0;       ///< E h(g)
    double std_error = 0.0;  ///< of the mean
    double intrinsic_volume_1 = 0.0;  ///< sqrt(2 pi) E h(g)
    double intrinsic_volume_1_std_error = 0.0;
};

/// Monte Carlo E h_K(g); K must be bounded (cones are rejected).
GaussianWidth gaussian_width(const PenaltySpec& K, const McOptions& mc);
GaussianWidth gaussian_width(const ConvexBody2D& body, const McOptions& mc);
/// Width of the convex hull of the columns of `points`.
GaussianWidth gaussian_width(const Matrix& points, const McOptions& mc);

// ---------------------------------------------------------------------------
// EC densities and tail approximations
// ---------------------------------------------------------------------------

/// Probabilists' Hermite polynomial He_j(u), H_{-1} treated as 0.
double hermite(int j, double u);

/// rho_0(u) = P(N(0,1) > u); rho_j(u) = (2 pi)^{-(j+1)/2} He_{j-1}(u) exp(-u^2 / 2).
double ec_density(int j, double u);

/// sum_j L_j rho_j(u). Negative entries are rejected.
double sup_tail_approx(std::span<const double> intrinsic_volumes, double u);

/// sum_j v_j P(chi^2_j > u^2) with chi^2_0 the point mass at 0.
double chi_bar_tail(std::span<const double> weights, double u);

/// sum_j v_j E chi_j, the mean of the projected-Gaussian norm.
double chi_bar_mean(std::span<const double> weights);

/// Intrinsic volumes of M = C intersected with the unit sphere from the conic weights of C.
Vector spherical_intrinsic_volumes(std::span<const double> conic_weights);

// ---------------------------------------------------------------------------
// Polyhedral cones
// ---------------------------------------------------------------------------

/// Polyhedral cone: an orthant cone or a linear subspace spanned by the columns of `basis`.
class ConeDescriptor {
public:
    struct Subspace {
        Matrix orthonormal_basis;
    };

    static ConeDescriptor orthant(std::vector<ConeSign> signs);
    /// The cone of an OrthantCone penalty.
    static ConeDescriptor from_penalty(const PenaltySpec& K);
    static ConeDescriptor subspace(const Matrix& basis);

    Index ambient_dimension() const noexcept { return dimension_; }
    const std::variant<std::vector<ConeSign>, Subspace>& kind() const noexcept { return kind_; }

    /// Projection of v and the dimension of the face containing it.
    std::pair<Vector, Index> project(const Vector& v) const;

    /// Exact conic intrinsic volumes (binomial for orthants, indicator for subspaces).
    Vector exact_weights() const;

private:
    ConeDescriptor(std::variant<std::vector<ConeSign>, Subspace> kind, Index dimension,
                   std::optional<PenaltySpec> penalty)
        : kind_(std::move(kind)), dimension_(dimension), penalty_(std::move(penalty)) {}
    std::variant<std::vector<ConeSign>, Subspace> kind_;
    Index dimension_;
    std::optional<PenaltySpec> penalty_;  ///< orthants project through the penalty module
};

/// v_j = P(projection of a standard normal lies in the relative interior of a j-face).
IntrinsicVolumeEstimate conic_intrinsic_volumes(const ConeDescriptor& cone, const McOptions& mc);

struct SupTailValidation {
    double empirical = 0.0;  ///< Monte Carlo P(||pi_C(eps)|| > u)
    double std_error = 0.0;
    double approx = 0.0;     ///< sum_j L_j(M) rho_j(u) with exact weights
    double gap = 0.0;        ///< empirical - approx
};

SupTailValidation sup_mc_validate(const ConeDescriptor& cone, double u, const McOptions& mc);

// ---------------------------------------------------------------------------
// Critical radius of a smooth unit-variance process on an interval
// ---------------------------------------------------------------------------

/// Covariance C(s, t) of a centered process with its derivatives, in extended precision.
struct KernelSpec {
    using Function = std::function<long double(long double, long double)>;
    std::string name;
    Function covariance;    ///< C(s, t)
    Function d_first;       ///< dC/ds
    Function d_mixed;       ///< d^2 C / ds dt
    bool unit_variance = true;

    static KernelSpec cosine();
    static KernelSpec squared_exponential(double length_scale = 1.0);
};

struct CriticalRadiusEstimate {
    double cot_sq = 0.0;
    double r_c = 1.5707963267948966;
    std::optional<std::pair<double, double>> argmax_pair;  ///< empty for an empty supremum
    double delta = 0.0;
    std::size_t admissible_pairs = 0;
};

/// E f^x(y)^2 = Var(f(y) | f(x), f'(x)) / (1 - C(x, y))^2.
long double conditioned_second_moment(const KernelSpec& kernel, long double x, long double y);

/// cot^2 r_c = sup over grid pairs with |x - y| >= delta of E f^x(y)^2.
/// `delta` defaults to twice the mean grid spacing.
CriticalRadiusEstimate critical_radius_process(const KernelSpec& kernel, std::span<const double> grid,
                                               std::optional<double> delta = std::nullopt);

}  // namespace lsgeom
