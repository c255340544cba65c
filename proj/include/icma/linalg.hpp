#pragma once

#include <string_view>

#include "icma/tensor.hpp"

namespace icma {

// A design is treated as full column rank when its smallest singular value
// exceeds this fraction of its largest.
inline constexpr double kRankTolerance = 1e-10;

bool has_full_column_rank(const Matrix& design);

// Least-squares coefficients for every column of rhs, via Householder QR.
// Throws ErrorKind::numerical naming `what` when the design is rank deficient.
Matrix solve_least_squares(const Matrix& design, const Matrix& rhs, std::string_view what);
Vector solve_least_squares(const Matrix& design, const Vector& rhs, std::string_view what);

// I - X (X'X)^{-1} X': projector onto the orthogonal complement of span(X).
Matrix residual_projector(const Matrix& design);

}  // namespace icma
