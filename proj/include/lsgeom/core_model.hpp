#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lsgeom {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Value of an unbounded support function. Every consumer branches on it
/// with std::isinf; no finite stand-in is ever used.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Response y, dense design X and an optional known noise scale sigma.
class RegressionProblem {
public:
    RegressionProblem(Matrix design, Vector response, std::optional<double> sigma = std::nullopt);

    const Matrix& design() const noexcept { return design_; }
    const Vector& response() const noexcept { return response_; }
    std::optional<double> sigma() const noexcept { return sigma_; }

    Index samples() const noexcept { return design_.rows(); }
    Index features() const noexcept { return design_.cols(); }

private:
    Matrix design_;
    Vector response_;
    std::optional<double> sigma_;
};

/// Per-coordinate restriction of an orthant cone.
enum class ConeSign { nonpositive, nonnegative, free };

/// Declarative description of the closed convex set K whose support function
/// h_K(beta) = sup_{u in K} u'beta is the penalty.
///
/// Three kinds are shipped:
///  - Box: the axis-aligned box prod_j [-r_j, r_j]; unit radii give the LASSO.
///  - ProductL2Balls: a product of Euclidean balls over a partition of the
///    coordinates (group LASSO).
///  - OrthantCone: prod_j K_j with K_j = (-inf, 0], [0, inf) or R. The penalty
///    is the indicator of the polar cone, so a nonpositive K_j forces beta_j >= 0.
class PenaltySpec {
public:
    struct Box {
        Vector radii;
    };
    struct ProductL2Balls {
        std::vector<std::vector<Index>> groups;
        Vector radii;
    };
    struct OrthantCone {
        std::vector<ConeSign> signs;
    };
    using Kind = std::variant<Box, ProductL2Balls, OrthantCone>;

    static PenaltySpec box(Vector radii);
    static PenaltySpec unit_box(Index dimension);
    static PenaltySpec product_l2_balls(std::vector<std::vector<Index>> groups, Vector radii);
    static PenaltySpec l2_ball(Index dimension, double radius = 1.0);
    static PenaltySpec orthant_cone(std::vector<ConeSign> signs);

    const Kind& kind() const noexcept { return kind_; }
    Index dimension() const noexcept { return dimension_; }

    bool is_box() const noexcept { return std::holds_alternative<Box>(kind_); }
    bool is_l2_product() const noexcept { return std::holds_alternative<ProductL2Balls>(kind_); }
    bool is_cone() const noexcept { return std::holds_alternative<OrthantCone>(kind_); }
    bool is_polyhedral() const noexcept { return !is_l2_product(); }
    /// K is bounded exactly when it is not a cone with a restricted or free coordinate.
    bool is_bounded() const noexcept { return !is_cone(); }

    /// Group index of each coordinate (ProductL2Balls only; empty otherwise).
    const std::vector<Index>& group_of() const noexcept { return group_of_; }

    /// Round-trippable text form, e.g. "box:1,1", "l2groups:0,1|2@1,2", "cone:+,-,0".
    std::string describe() const;

private:
    PenaltySpec(Kind kind, Index dimension);

    Kind kind_;
    Index dimension_;
    std::vector<Index> group_of_;
};

/// Parses the text form produced by PenaltySpec::describe().
///
/// Accepted forms: "box" (unit radii, needs `dimension`), "box:r" (constant
/// radius), "box:r1,...,rp", "l2" (one unit ball), "l2groups:0,1|2,3[@r1,r2]",
/// "cone:s1,...,sp" with s in {+,-,0} meaning K_j = [0,inf), (-inf,0], R, and
/// "nonneg"/"nonpos" shorthands for sign-restricted beta.
PenaltySpec parse_penalty(const std::string& text, Index dimension);

/// Primal estimate together with its dual vector and certificates.
enum class SolveStatus { converged, max_iterations };

struct Solution {
    Vector beta_hat;
    Vector u_hat;
    Vector mu_hat;
    double lambda = 0.0;
    double objective = 0.0;
    double duality_gap = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    SolveStatus status = SolveStatus::converged;

    bool converged() const noexcept { return status == SolveStatus::converged; }
};

/// h_K(beta). Returns kInfinity when the supremum is unbounded.
double support_function(const Vector& beta, const PenaltySpec& K);

/// h_{K polar}(v), the dual seminorm of h_K. For cones this is 0 on K and kInfinity off it.
double polar_gauge(const Vector& v, const PenaltySpec& K);

/// 1/2 ||y - X beta||^2 + lambda h_K(beta); lambda = 0 gives the plain least-squares value.
double objective_value(const RegressionProblem& problem, const PenaltySpec& K, double lambda, const Vector& beta);

namespace detail {
void require_dimension(Index actual, Index expected, const char* what);
void require_finite(const Vector& v, const char* what);
}  // namespace detail

}  // namespace lsgeom
