#include "icma/tensor.hpp"

#include <cmath>
#include <string>

#include "icma/error.hpp"

namespace icma {

namespace {

std::string describe(const Dims& d) {
  return std::to_string(d.n1) + "x" + std::to_string(d.n2) + "x" + std::to_string(d.n3);
}

void require_same_dims(const Tensor3& a, const Tensor3& b, const char* op) {
  if (!(a.dims() == b.dims())) {
    fail(ErrorKind::data, std::string(op) + ": dimension mismatch " + describe(a.dims()) +
                              " vs " + describe(b.dims()));
  }
}

void require_mode(int mode) {
  if (mode < 1 || mode > 3) fail(ErrorKind::data, "invalid mode index " + std::to_string(mode));
}

Dims with_mode(Dims d, int mode, std::size_t extent) {
  if (mode == 1) d.n1 = extent;
  if (mode == 2) d.n2 = extent;
  if (mode == 3) d.n3 = extent;
  return d;
}

}  // namespace

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::bootstrap: return "bootstrap";
  }
  return "unknown";
}

std::size_t Dims::operator[](int mode) const {
  require_mode(mode);
  return mode == 1 ? n1 : mode == 2 ? n2 : n3;
}

Tensor3::Tensor3(Dims dims, double fill) : dims_(dims), values_(dims.size(), fill) {}

Tensor3::Tensor3(Dims dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
  if (values_.size() != dims_.size()) {
    fail(ErrorKind::data, "tensor " + describe(dims_) + " needs " + std::to_string(dims_.size()) +
                              " values, got " + std::to_string(values_.size()));
  }
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  require_same_dims(*this, other, "add");
  as_vector() += other.as_vector();
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
  require_same_dims(*this, other, "subtract");
  as_vector() -= other.as_vector();
  return *this;
}

Tensor3& Tensor3::operator*=(double c) {
  as_vector() *= c;
  return *this;
}

Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
Tensor3 operator*(double c, Tensor3 t) { return t *= c; }

Vector vec(const Tensor3& t) { return t.as_vector(); }

Tensor3 unvec(std::span<const double> values, Dims dims) {
  return Tensor3(dims, std::vector<double>(values.begin(), values.end()));
}

Tensor3 unvec(const Vector& values, Dims dims) {
  return unvec(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), dims);
}

Matrix mode_matricize(const Tensor3& t, int mode) {
  require_mode(mode);
  const Dims& d = t.dims();
  const auto rows = static_cast<Eigen::Index>(d[mode]);
  const auto cols = static_cast<Eigen::Index>(d.size() / d[mode]);
  Matrix out(rows, cols);
  for (std::size_t p3 = 0; p3 < d.n3; ++p3) {
    for (std::size_t p2 = 0; p2 < d.n2; ++p2) {
      for (std::size_t p1 = 0; p1 < d.n1; ++p1) {
        std::size_t row = 0;
        std::size_t col = 0;
        switch (mode) {
          case 1: row = p1; col = p2 + d.n2 * p3; break;
          case 2: row = p2; col = p1 + d.n1 * p3; break;
          default: row = p3; col = p1 + d.n1 * p2; break;
        }
        out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = t(p1, p2, p3);
      }
    }
  }
  return out;
}

Tensor3 mode_fold(const Matrix& m, int mode, Dims dims) {
  require_mode(mode);
  if (static_cast<std::size_t>(m.rows()) != dims[mode] ||
      static_cast<std::size_t>(m.rows() * m.cols()) != dims.size()) {
    fail(ErrorKind::data, "mode_fold: matrix shape does not match " + describe(dims));
  }
  Tensor3 out(dims);
  for (std::size_t p3 = 0; p3 < dims.n3; ++p3) {
    for (std::size_t p2 = 0; p2 < dims.n2; ++p2) {
      for (std::size_t p1 = 0; p1 < dims.n1; ++p1) {
        std::size_t row = 0;
        std::size_t col = 0;
        switch (mode) {
          case 1: row = p1; col = p2 + dims.n2 * p3; break;
          case 2: row = p2; col = p1 + dims.n1 * p3; break;
          default: row = p3; col = p1 + dims.n1 * p2; break;
        }
        out(p1, p2, p3) = m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
      }
    }
  }
  return out;
}

Tensor3 mode_multiply(const Tensor3& t, int mode, const Matrix& u) {
  require_mode(mode);
  if (static_cast<std::size_t>(u.cols()) != t.dims()[mode]) {
    fail(ErrorKind::data, "mode_multiply: matrix has " + std::to_string(u.cols()) +
                              " columns, mode " + std::to_string(mode) + " extent is " +
                              std::to_string(t.dims()[mode]));
  }
  const Matrix product = u * mode_matricize(t, mode);
  return mode_fold(product, mode, with_mode(t.dims(), mode, static_cast<std::size_t>(u.rows())));
}

Matrix kron(const Matrix& u, const Matrix& v) {
  Matrix out(u.rows() * v.rows(), u.cols() * v.cols());
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      out.block(i * v.rows(), j * v.cols(), v.rows(), v.cols()) = u(i, j) * v;
    }
  }
  return out;
}

double inner(const Tensor3& u, const Tensor3& v) {
  require_same_dims(u, v, "inner");
  return u.as_vector().dot(v.as_vector());
}

double frobenius(const Tensor3& u) { return u.as_vector().norm(); }

Tensor3 hadamard(const Tensor3& u, const Tensor3& v) {
  require_same_dims(u, v, "hadamard");
  Tensor3 out(u.dims());
  out.as_vector() = u.as_vector().cwiseProduct(v.as_vector());
  return out;
}

}  // namespace icma
