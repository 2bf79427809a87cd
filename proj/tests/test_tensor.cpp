#include "podtann/tensor.hpp"

#include <doctest.h>

using namespace podtann;

namespace {

Vec6 random_tensor(Rng& rng, Scalar scale = 1.0) {
  Vec6 t;
  for (int i = 0; i < 6; ++i)
    t(i) = scale * rng.normal();
  return t;
}

} // namespace

TEST_SUITE("tensor") {

TEST_CASE("to_matrix maps the zero vector and the identity") {
  CHECK(to_matrix(Vec6::Zero().eval()).isZero(0.0));
  Vec6 id;
  id << 1, 1, 1, 0, 0, 0;
  CHECK(to_matrix(id).isApprox(Mat3::Identity(), 1e-15));
}

TEST_CASE("to_matrix off-diagonal carries the Mandel factor") {
  const Scalar x = 0.3;
  Vec6 t = Vec6::Zero();
  t(3) = kSqrt2 * x;
  const Mat3 m = to_matrix(t);
  CHECK(m(1, 2) == doctest::Approx(x).epsilon(1e-15));
  CHECK(m(2, 1) == doctest::Approx(x).epsilon(1e-15));
  // double contraction equality against direct 3x3 arithmetic
  Rng rng(7);
  const Vec6 a = random_tensor(rng);
  const Mat3 ma = to_matrix(a);
  CHECK(a.dot(t) == doctest::Approx((ma.transpose() * to_matrix(t)).trace()).epsilon(1e-12));
}

TEST_CASE("round trip to the 3x3 matrix is exact") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const Vec6 t = random_tensor(rng);
    CHECK((from_matrix(to_matrix(t)) - t).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("Mandel inner product equals the tensor double contraction") {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const Vec6 a = random_tensor(rng);
    const Vec6 b = random_tensor(rng);
    const Scalar direct = (to_matrix(a) * to_matrix(b)).trace();
    CHECK(std::abs(a.dot(b) - direct) <= 1e-12 * (1.0 + std::abs(direct)));
  }
}

TEST_CASE("invariants of simple states") {
  const auto zero = invariants(Vec6::Zero().eval());
  CHECK(zero.i1 == 0.0);
  CHECK(zero.j2 == 0.0);

  Vec6 vol;
  vol << 1, 1, 1, 0, 0, 0;
  const auto v = invariants(vol);
  CHECK(v.i1 == doctest::Approx(3.0));
  CHECK(v.j2 == doctest::Approx(0.0));

  Vec6 uni = Vec6::Zero();
  uni(0) = 0.01;
  const auto u = invariants(uni);
  CHECK(u.i1 == doctest::Approx(0.01));
  // brute-force deviator arithmetic
  Vec6 dev = uni;
  dev(0) -= 0.01 / 3.0;
  dev(1) -= 0.01 / 3.0;
  dev(2) -= 0.01 / 3.0;
  CHECK(u.j2 == doctest::Approx(0.5 * dev.squaredNorm()).epsilon(1e-14));
  CHECK(u.q == doctest::Approx(std::sqrt(3.0 * u.j2)).epsilon(1e-14));
}

TEST_CASE("rotate: identity, isotropy, matrix-conjugation oracle") {
  Rng rng(17);
  const Vec6 t = random_tensor(rng);
  CHECK(rotate(t, Mat3::Identity()).isApprox(t, 1e-14));

  Vec6 hydro;
  hydro << 2.5, 2.5, 2.5, 0, 0, 0;
  const Mat3 r = random_rotation(rng);
  CHECK(rotate(hydro, r).isApprox(hydro, 1e-12));

  const Vec6 rt = rotate(t, r);
  const Mat3 expect = r * to_matrix(t) * r.transpose();
  CHECK(to_matrix(rt).isApprox(expect, 1e-12));
}

TEST_CASE("rotate rejects a non-orthogonal matrix") {
  Mat3 bad = Mat3::Identity();
  bad(0, 1) = 1e-3;
  CHECK_THROWS_AS(rotate(Vec6::Zero().eval(), bad), Error);
}

TEST_CASE("rotate preserves invariants and composes") {
  Rng rng(19);
  for (int i = 0; i < 50; ++i) {
    const Vec6 t = random_tensor(rng);
    const Mat3 r1 = random_rotation(rng);
    const Mat3 r2 = random_rotation(rng);
    const Vec6 rt = rotate(t, r1);
    const auto a = invariants(t);
    const auto b = invariants(rt);
    CHECK(std::abs(a.i1 - b.i1) <= 1e-10 * (1.0 + std::abs(a.i1)));
    CHECK(std::abs(a.j2 - b.j2) <= 1e-10 * (1.0 + a.j2));
    CHECK(std::abs(t.norm() - rt.norm()) <= 1e-10);
    const Vec6 lhs = rotate(rotate(t, r1), r2);
    const Vec6 rhs = rotate(t, (r2 * r1).eval());
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("random_rotation is deterministic and proper") {
  Rng a(123), b(123);
  const Mat3 r1 = random_rotation(a);
  const Mat3 r2 = random_rotation(b);
  CHECK((r1 - r2).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(29);
  for (int i = 0; i < 200; ++i) {
    const Mat3 r = random_rotation(rng);
    CHECK(rotation_residual(r) <= 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("random_rotation Haar mean is near zero") {
  Rng rng(31);
  Mat3 mean = Mat3::Zero();
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    mean += random_rotation(rng);
  mean /= static_cast<Scalar>(n);
  CHECK(mean.cwiseAbs().maxCoeff() < 0.05);
}

} // TEST_SUITE
