#pragma once

#include "lsgeom/core_model.hpp"

#include <optional>

namespace lsgeom {

/// A coordinate within this distance of a bound of tK counts as lying on it.
inline constexpr double kFaceTolerance = 1e-9;

/// Nearest point of tK to v.
struct ProjectionResult {
    Vector point;
    double distance = 0.0;
    /// Dimension of the lowest-dimensional face of tK containing `point`.
    /// Only set for polyhedral K.
    std::optional<Index> face_dimension;
};

/// Euclidean projection of v onto the scaled set tK (t >= 0; 0K = {0}).
ProjectionResult project_scaled(const Vector& v, const PenaltySpec& K, double t);

/// argmin_b 1/2 ||v - b||^2 + t h_K(b), computed as v - project_scaled(v, K, t).point.
Vector prox_penalty(const Vector& v, const PenaltySpec& K, double t);

/// Euclidean distance from v to tK; zero exactly on members.
double membership_check(const Vector& v, const PenaltySpec& K, double t);

}  // namespace lsgeom
