#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace icma {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Extents of a 3-way array. Indices are 0-based throughout the C++ API.
struct Dims {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t n3 = 0;

  std::size_t size() const { return n1 * n2 * n3; }
  std::size_t operator[](int mode) const;  // mode in {1, 2, 3}
  bool operator==(const Dims&) const = default;
};

// Dense 3-tensor stored contiguously in vec order: p1 fastest, then p2, then p3.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Dims dims, double fill = 0.0);
  Tensor3(Dims dims, std::vector<double> values);

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t p1, std::size_t p2, std::size_t p3) {
    return values_[offset(p1, p2, p3)];
  }
  double operator()(std::size_t p1, std::size_t p2, std::size_t p3) const {
    return values_[offset(p1, p2, p3)];
  }
  std::size_t offset(std::size_t p1, std::size_t p2, std::size_t p3) const {
    return p1 + dims_.n1 * (p2 + dims_.n2 * p3);
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  Eigen::Map<Vector> as_vector() {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }
  Eigen::Map<const Vector> as_vector() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

  Tensor3& operator+=(const Tensor3& other);
  Tensor3& operator-=(const Tensor3& other);
  Tensor3& operator*=(double c);

  bool operator==(const Tensor3&) const = default;

 private:
  Dims dims_{};
  std::vector<double> values_;
};

Tensor3 operator+(Tensor3 a, const Tensor3& b);
Tensor3 operator-(Tensor3 a, const Tensor3& b);
Tensor3 operator*(double c, Tensor3 t);

Vector vec(const Tensor3& t);
Tensor3 unvec(std::span<const double> values, Dims dims);
Tensor3 unvec(const Vector& values, Dims dims);

// Mode-d unfolding. Entry (p1,p2,p3) lands at row p_d and column
// sum over d' != d of p_{d'} times the product of the preceding non-d extents.
Matrix mode_matricize(const Tensor3& t, int mode);
// Inverse of mode_matricize for a target with the given dims.
Tensor3 mode_fold(const Matrix& m, int mode, Dims dims);

// t x_d u: multiplies every mode-d fiber by u (u has N_d columns).
Tensor3 mode_multiply(const Tensor3& t, int mode, const Matrix& u);

Matrix kron(const Matrix& u, const Matrix& v);

double inner(const Tensor3& u, const Tensor3& v);
double frobenius(const Tensor3& u);
Tensor3 hadamard(const Tensor3& u, const Tensor3& v);

}  // namespace icma
