#pragma once

#include "lsgeom/core_model.hpp"
#include "lsgeom/random.hpp"

#include <cmath>
#include <cstdint>

namespace lsgeom::testing {

inline Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed)
{
    CounterStream rng(derive_key(seed, "test_matrix"));
    Matrix m(rows, cols);
    rng.fill_normal(m.reshaped());
    return m;
}

inline Vector gaussian_vector(Index n, std::uint64_t seed)
{
    CounterStream rng(derive_key(seed, "test_vector"));
    Vector v(n);
    rng.fill_normal(v);
    return v;
}

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
inline Matrix orthogonal_matrix(Index n, std::uint64_t seed)
{
    const Eigen::HouseholderQR<Matrix> qr(gaussian_matrix(n, n, seed));
    return qr.householderQ();
}

inline double soft_threshold(double v, double t) { return std::copysign(std::max(std::abs(v) - t, 0.0), v); }

/// Upper tail of N(0, 1).
inline double normal_tail(double u) { return 0.5 * std::erfc(u / std::sqrt(2.0)); }

}  // namespace lsgeom::testing
