#include <random>

#include "doctest.h"

#include "icma/error.hpp"
#include "icma/tensor.hpp"

using namespace icma;

namespace {

Tensor3 random_tensor(Dims d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Tensor3 t(d);
  for (double& v : t.values()) v = g(rng);
  return t;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
  return m;
}

// Brute-force mode product by the defining sum.
Tensor3 brute_mode_multiply(const Tensor3& t, int mode, const Matrix& u) {
  Dims d = t.dims();
  Dims out = d;
  if (mode == 1) out.n1 = static_cast<std::size_t>(u.rows());
  if (mode == 2) out.n2 = static_cast<std::size_t>(u.rows());
  if (mode == 3) out.n3 = static_cast<std::size_t>(u.rows());
  Tensor3 r(out);
  for (std::size_t a = 0; a < out.n1; ++a)
    for (std::size_t b = 0; b < out.n2; ++b)
      for (std::size_t c = 0; c < out.n3; ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k < d[mode]; ++k) {
          const auto q = static_cast<Eigen::Index>(mode == 1 ? a : mode == 2 ? b : c);
          const std::size_t p1 = mode == 1 ? k : a, p2 = mode == 2 ? k : b, p3 = mode == 3 ? k : c;
          s += u(q, static_cast<Eigen::Index>(k)) * t(p1, p2, p3);
        }
        r(a, b, c) = s;
      }
  return r;
}

}  // namespace

TEST_CASE("vec order has p1 fastest, then p2, then p3") {
  Tensor3 t(Dims{2, 2, 2});
  for (std::size_t p1 = 0; p1 < 2; ++p1)
    for (std::size_t p2 = 0; p2 < 2; ++p2)
      for (std::size_t p3 = 0; p3 < 2; ++p3) t(p1, p2, p3) = 100.0 * (p1 + 1) + 10.0 * (p2 + 1) + (p3 + 1);
  const Vector v = vec(t);
  const double expected[8] = {111, 211, 121, 221, 112, 212, 122, 222};
  for (int k = 0; k < 8; ++k) CHECK(v(k) == expected[k]);
  CHECK(vec(Tensor3(Dims{2, 2, 2})).isZero(0.0));
}

TEST_CASE("vec round trip and linearity") {
  std::mt19937_64 rng(1);
  const Tensor3 u = random_tensor({3, 4, 2}, rng);
  const Tensor3 w = random_tensor({3, 4, 2}, rng);
  CHECK(unvec(vec(u), u.dims()) == u);
  const Vector lhs = vec(2.0 * u + (-3.0) * w);
  const Vector rhs = 2.0 * vec(u) - 3.0 * vec(w);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(unvec(Vector::Zero(5), Dims{2, 2, 2}), Error);
}

TEST_CASE("mode matricization matches the column index formula") {
  std::mt19937_64 rng(2);
  const Tensor3 t = random_tensor({3, 2, 4}, rng);
  const Dims d = t.dims();
  for (int mode = 1; mode <= 3; ++mode) {
    const Matrix m = mode_matricize(t, mode);
    REQUIRE(static_cast<std::size_t>(m.rows()) == d[mode]);
    REQUIRE(static_cast<std::size_t>(m.cols()) == d.size() / d[mode]);
    for (std::size_t p1 = 0; p1 < d.n1; ++p1)
      for (std::size_t p2 = 0; p2 < d.n2; ++p2)
        for (std::size_t p3 = 0; p3 < d.n3; ++p3) {
          std::size_t row = 0, col = 0;
          if (mode == 1) row = p1, col = p2 + d.n2 * p3;
          if (mode == 2) row = p2, col = p1 + d.n1 * p3;
          if (mode == 3) row = p3, col = p1 + d.n1 * p2;
          CHECK(m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) == t(p1, p2, p3));
        }
    CHECK(mode_fold(m, mode, d) == t);
  }
  // Mode-1 unfolding stacked column by column is vec(t).
  const Matrix m1 = mode_matricize(t, 1);
  CHECK(Eigen::Map<const Vector>(m1.data(), m1.size()) == vec(t));
  const Tensor3 one(Dims{1, 1, 1}, 4.5);
  for (int mode = 1; mode <= 3; ++mode) CHECK(mode_matricize(one, mode)(0, 0) == 4.5);
  CHECK_THROWS_AS(mode_matricize(t, 4), Error);
}

TEST_CASE("mode product agrees with the brute-force sum") {
  std::mt19937_64 rng(3);
  const Tensor3 t = random_tensor({3, 3, 3}, rng);
  for (int mode = 1; mode <= 3; ++mode) {
    const Matrix u = random_matrix(2, 3, rng);
    const Tensor3 fast = mode_multiply(t, mode, u);
    const Tensor3 slow = brute_mode_multiply(t, mode, u);
    CHECK((vec(fast) - vec(slow)).cwiseAbs().maxCoeff() < 1e-13);
  }
  CHECK(mode_multiply(t, 1, Matrix::Identity(3, 3)) == t);
  CHECK(vec(mode_multiply(t, 2, Matrix::Zero(3, 3))).isZero(0.0));
  CHECK_THROWS_AS(mode_multiply(t, 1, Matrix::Zero(2, 4)), Error);

  const Matrix u1 = random_matrix(2, 3, rng);
  const Matrix u2 = random_matrix(4, 3, rng);
  const Tensor3 a = mode_multiply(mode_multiply(t, 1, u1), 2, u2);
  const Tensor3 b = mode_multiply(mode_multiply(t, 2, u2), 1, u1);
  CHECK((vec(a) - vec(b)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Kronecker product identities") {
  CHECK(kron(Matrix::Identity(2, 2), Matrix::Identity(3, 3)) == Matrix::Identity(6, 6));
  std::mt19937_64 rng(4);
  const Matrix a = random_matrix(2, 2, rng), b = random_matrix(2, 2, rng), x = random_matrix(2, 2, rng);
  const Matrix axb = a * x * b.transpose();
  const Vector lhs = Eigen::Map<const Vector>(axb.data(), 4);
  const Vector rhs = kron(b, a) * Eigen::Map<const Vector>(x.data(), 4);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
  const Matrix v = random_matrix(3, 2, rng);
  CHECK(kron(Matrix::Constant(1, 1, 2.0), v) == 2.0 * v);
  // Block structure by definition.
  const Matrix u = random_matrix(2, 3, rng);
  const Matrix k = kron(u, v);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      for (Eigen::Index r = 0; r < 3; ++r)
        for (Eigen::Index c = 0; c < 2; ++c) CHECK(k(i * 3 + r, j * 2 + c) == u(i, j) * v(r, c));
}

TEST_CASE("Tucker composition equals the Kronecker form on 2x2x2") {
  std::mt19937_64 rng(5);
  const Tensor3 core = random_tensor({2, 2, 2}, rng);
  const Matrix u1 = random_matrix(2, 2, rng), u2 = random_matrix(2, 2, rng), u3 = random_matrix(2, 2, rng);
  const Tensor3 t = mode_multiply(mode_multiply(mode_multiply(core, 1, u1), 2, u2), 3, u3);
  const Vector k = kron(u3, kron(u2, u1)) * vec(core);
  CHECK((vec(t) - k).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("inner product, Frobenius norm and Hadamard product") {
  const Tensor3 ones(Dims{2, 2, 2}, 1.0);
  CHECK(inner(ones, ones) == 8.0);
  std::mt19937_64 rng(6);
  const Tensor3 u = random_tensor({3, 2, 2}, rng);
  const Tensor3 v = random_tensor({3, 2, 2}, rng);
  const Tensor3 zero(u.dims());
  CHECK(inner(u, zero) == 0.0);
  CHECK(hadamard(u, zero) == zero);
  CHECK(inner(u, u) == doctest::Approx(frobenius(u) * frobenius(u)).epsilon(1e-14));
  CHECK(inner(u, v) == doctest::Approx(vec(u).dot(vec(v))).epsilon(1e-14));
  const Tensor3 h = hadamard(u, v);
  for (std::size_t k = 0; k < u.size(); ++k) CHECK(h.values()[k] == u.values()[k] * v.values()[k]);
  CHECK_THROWS_AS(inner(u, ones), Error);
  CHECK_THROWS_AS(hadamard(u, ones), Error);
  CHECK_THROWS_AS(Tensor3(u) += ones, Error);
}
