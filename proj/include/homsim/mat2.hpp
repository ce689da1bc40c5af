#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace homsim {

using Cx = std::complex<double>;

/// Dense 2x2 complex matrix over the basis {|g> = 0, |e> = 1}.
/// Entry (i, j) is <i|M|j>. Small value type, everything inline.
struct Mat2 {
  std::array<Cx, 4> a{}; // row-major: a[2*i + j]

  constexpr Cx& operator()(int i, int j) { return a[2 * i + j]; }
  constexpr const Cx& operator()(int i, int j) const { return a[2 * i + j]; }

  static constexpr Mat2 zero() { return Mat2{}; }
  static constexpr Mat2 identity() {
    Mat2 m;
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    return m;
  }

  Mat2 adjoint() const {
    Mat2 m;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) m(i, j) = std::conj((*this)(j, i));
    return m;
  }

  Cx trace() const { return a[0] + a[3]; }

  /// Largest |M - M^dagger| entry.
  double hermiticity_residual() const {
    double r = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        r = std::max(r, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return r;
  }

  friend Mat2 operator+(const Mat2& x, const Mat2& y) {
    Mat2 m;
    for (std::size_t k = 0; k < 4; ++k) m.a[k] = x.a[k] + y.a[k];
    return m;
  }
  friend Mat2 operator-(const Mat2& x, const Mat2& y) {
    Mat2 m;
    for (std::size_t k = 0; k < 4; ++k) m.a[k] = x.a[k] - y.a[k];
    return m;
  }
  friend Mat2 operator*(const Mat2& x, const Mat2& y) {
    Mat2 m;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        m(i, j) = x(i, 0) * y(0, j) + x(i, 1) * y(1, j);
    return m;
  }
  friend Mat2 operator*(Cx s, const Mat2& x) {
    Mat2 m;
    for (std::size_t k = 0; k < 4; ++k) m.a[k] = s * x.a[k];
    return m;
  }
  friend Mat2 operator*(const Mat2& x, Cx s) { return s * x; }
};

/// Eigenvalues of a Hermitian 2x2 matrix, ascending.
inline std::array<double, 2> hermitian_eigenvalues(const Mat2& m) {
  const double tr = m.trace().real();
  const double det =
      (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)).real();
  const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
  return {0.5 * (tr - disc), 0.5 * (tr + disc)};
}

/// Length-4 complex vector: a 2x2 matrix stacked column by column,
/// vec(M) = [M(0,0), M(1,0), M(0,1), M(1,1)].
struct Vec4 {
  std::array<Cx, 4> v{};

  static Vec4 stack(const Mat2& m) {
    Vec4 x;
    x.v = {m(0, 0), m(1, 0), m(0, 1), m(1, 1)};
    return x;
  }
  Mat2 unstack() const {
    Mat2 m;
    m(0, 0) = v[0];
    m(1, 0) = v[1];
    m(0, 1) = v[2];
    m(1, 1) = v[3];
    return m;
  }

  friend Vec4 operator+(const Vec4& x, const Vec4& y) {
    Vec4 r;
    for (std::size_t k = 0; k < 4; ++k) r.v[k] = x.v[k] + y.v[k];
    return r;
  }
  friend Vec4 operator*(Cx s, const Vec4& x) {
    Vec4 r;
    for (std::size_t k = 0; k < 4; ++k) r.v[k] = s * x.v[k];
    return r;
  }
};

/// Dense 4x4 complex matrix acting on column-stacked 2x2 matrices.
struct Mat4 {
  std::array<Cx, 16> a{};

  Cx& operator()(int i, int j) { return a[4 * i + j]; }
  const Cx& operator()(int i, int j) const { return a[4 * i + j]; }

  Vec4 apply(const Vec4& x) const {
    Vec4 r;
    for (int i = 0; i < 4; ++i) {
      Cx s = 0.0;
      for (int j = 0; j < 4; ++j) s += (*this)(i, j) * x.v[j];
      r.v[i] = s;
    }
    return r;
  }

  friend Mat4 operator+(const Mat4& x, const Mat4& y) {
    Mat4 m;
    for (std::size_t k = 0; k < 16; ++k) m.a[k] = x.a[k] + y.a[k];
    return m;
  }
  friend Mat4 operator-(const Mat4& x, const Mat4& y) {
    Mat4 m;
    for (std::size_t k = 0; k < 16; ++k) m.a[k] = x.a[k] - y.a[k];
    return m;
  }
  friend Mat4 operator*(Cx s, const Mat4& x) {
    Mat4 m;
    for (std::size_t k = 0; k < 16; ++k) m.a[k] = s * x.a[k];
    return m;
  }
};

/// Kronecker product; with column stacking, vec(A X B) = kron(B^T, A) vec(X).
inline Mat4 kron(const Mat2& x, const Mat2& y) {
  Mat4 m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          m(2 * i + k, 2 * j + l) = x(i, j) * y(k, l);
  return m;
}

inline Mat2 transpose(const Mat2& m) {
  Mat2 t;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) t(i, j) = m(j, i);
  return t;
}

} // namespace homsim
