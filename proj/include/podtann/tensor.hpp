#pragma once

#include "podtann/errors.hpp"
#include "podtann/types.hpp"

#include <cmath>

// Symmetric second-order tensors in orthonormal (Mandel) 6-vector form:
//
//   [a11, a22, a33, sqrt(2)*a23, sqrt(2)*a13, sqrt(2)*a12]
//
// The sqrt(2) factors make the Euclidean inner product of two 6-vectors
// equal to the full double contraction A:B of the 3x3 tensors, so norms,
// projections and energy densities carry no shear bookkeeping.

namespace podtann {

inline constexpr Scalar kSqrt2 = 1.4142135623730951;

// [1,1,1,0,0,0]: Mandel representation of the identity tensor
inline Vec6 identity6() {
  Vec6 m;
  m << 1, 1, 1, 0, 0, 0;
  return m;
}

template <typename Derived>
Mat3T<typename Derived::Scalar> to_matrix(const Eigen::MatrixBase<Derived>& t) {
  using T = typename Derived::Scalar;
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 6);
  const T s = T(1) / T(kSqrt2);
  Mat3T<T> m;
  m << t(0), s * t(5), s * t(4),
       s * t(5), t(1), s * t(3),
       s * t(4), s * t(3), t(2);
  return m;
}

template <typename Derived>
Vec6T<typename Derived::Scalar> from_matrix(const Eigen::MatrixBase<Derived>& m) {
  using T = typename Derived::Scalar;
  EIGEN_STATIC_ASSERT_MATRIX_SPECIFIC_SIZE(Derived, 3, 3);
  Vec6T<T> t;
  t << m(0, 0), m(1, 1), m(2, 2),
       T(kSqrt2) * m(1, 2), T(kSqrt2) * m(0, 2), T(kSqrt2) * m(0, 1);
  return t;
}

struct Invariants {
  Scalar i1;  // trace
  Scalar j2;  // second invariant of the deviator, 1/2 s:s
  Scalar p;   // mean (i1 / 3)
  Scalar q;   // sqrt(3 j2)
};

template <typename Derived>
Invariants invariants(const Eigen::MatrixBase<Derived>& t) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 6);
  Invariants inv;
  inv.i1 = t(0) + t(1) + t(2);
  inv.p = inv.i1 / 3.0;
  Vec6 s = t;
  s(0) -= inv.p;
  s(1) -= inv.p;
  s(2) -= inv.p;
  inv.j2 = 0.5 * s.squaredNorm();
  inv.q = std::sqrt(3.0 * inv.j2);
  return inv;
}

template <typename Derived>
Vec6T<typename Derived::Scalar> deviator(const Eigen::MatrixBase<Derived>& t) {
  using T = typename Derived::Scalar;
  Vec6T<T> s = t;
  const T p = (t(0) + t(1) + t(2)) / T(3);
  s(0) -= p;
  s(1) -= p;
  s(2) -= p;
  return s;
}

inline Scalar rotation_residual(const Mat3& r) {
  return (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
}

inline void check_rotation(const Mat3& r, Scalar tol = 1e-9) {
  if (rotation_residual(r) > tol || r.determinant() < 0.0)
    throw Error("rotate: matrix is not a proper rotation");
}

// Representation of R * T * R^T for a proper rotation R.
template <typename Derived>
Vec6 rotate(const Eigen::MatrixBase<Derived>& t, const Mat3& r) {
  check_rotation(r);
  return from_matrix((r * to_matrix(t) * r.transpose()).eval());
}

// Uniform SO(3) sample via a normalized 4-normal quaternion.
inline Mat3 random_rotation(Rng& rng) {
  Scalar w, x, y, z, n2;
  do {
    w = rng.normal();
    x = rng.normal();
    y = rng.normal();
    z = rng.normal();
    n2 = w * w + x * x + y * y + z * z;
  } while (n2 < 1e-12);
  const Scalar n = std::sqrt(n2);
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

} // namespace podtann
