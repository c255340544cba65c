#include "icma/linalg.hpp"

#include <string>

#include "icma/error.hpp"

namespace icma {

namespace {

bool triangular_full_rank(const Matrix& r) {
  Eigen::JacobiSVD<Matrix> svd(r);
  const Vector& s = svd.singularValues();
  if (s.size() == 0) return true;
  const double largest = s(0);
  return largest > 0.0 && s(s.size() - 1) > kRankTolerance * largest;
}

Matrix upper_factor(const Eigen::HouseholderQR<Matrix>& qr, Eigen::Index p) {
  return qr.matrixQR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
}

void require_rank(const Eigen::HouseholderQR<Matrix>& qr, const Matrix& design,
                  std::string_view what) {
  if (design.rows() < design.cols() || !triangular_full_rank(upper_factor(qr, design.cols()))) {
    fail(ErrorKind::numerical, std::string(what) + ": rank-deficient design (" +
                                   std::to_string(design.rows()) + "x" +
                                   std::to_string(design.cols()) + ")");
  }
}

}  // namespace

bool has_full_column_rank(const Matrix& design) {
  if (design.rows() < design.cols()) return false;
  if (design.cols() == 0) return true;
  Eigen::HouseholderQR<Matrix> qr(design);
  return triangular_full_rank(upper_factor(qr, design.cols()));
}

Matrix solve_least_squares(const Matrix& design, const Matrix& rhs, std::string_view what) {
  if (design.cols() == 0) return Matrix::Zero(0, rhs.cols());
  Eigen::HouseholderQR<Matrix> qr(design);
  require_rank(qr, design, what);
  return qr.solve(rhs);
}

Vector solve_least_squares(const Matrix& design, const Vector& rhs, std::string_view what) {
  if (design.cols() == 0) return Vector::Zero(0);
  Eigen::HouseholderQR<Matrix> qr(design);
  require_rank(qr, design, what);
  return qr.solve(rhs);
}

Matrix residual_projector(const Matrix& design) {
  const Eigen::Index n = design.rows();
  Matrix identity = Matrix::Identity(n, n);
  if (design.cols() == 0) return identity;
  return identity - design * solve_least_squares(design, identity, "residual projector");
}

}  // namespace icma
