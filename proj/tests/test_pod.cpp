#include "podtann/pod.hpp"

#include "podtann/errors.hpp"

#include <doctest.h>

#include <limits>
#include <string>

using namespace podtann;
using namespace podtann::pod;

namespace {

MatX random_matrix(Rng& rng, int n, int m) {
  MatX a(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      a(i, j) = rng.normal();
  return a;
}

SnapshotMatrix wrap(const MatX& a) {
  SnapshotMatrix s;
  s.data = a;
  s.layout.n_points = static_cast<int>(a.rows());
  s.layout.blocks = {{"x", 1, "-"}};
  return s;
}

} // namespace

TEST_SUITE("pod") {

TEST_CASE("rank-1 matrix has exactly one nonzero singular value") {
  Rng rng(3);
  const VecX u = random_matrix(rng, 7, 1);
  const VecX v = random_matrix(rng, 5, 1);
  const auto basis = compute_pod_basis(wrap(u * v.transpose()), 1);
  CHECK(basis.singular_values(0) > 0.0);
  for (int i = 1; i < basis.singular_values.size(); ++i)
    CHECK(basis.singular_values(i) <= 1e-10 * basis.singular_values(0));
}

TEST_CASE("orthogonal-column input: singular values equal column norms") {
  MatX a = MatX::Zero(6, 3);
  a(0, 0) = 3.0;
  a(2, 1) = 2.0;
  a(5, 2) = 0.5;
  const auto basis = compute_pod_basis(wrap(a), 3);
  CHECK(basis.singular_values(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(basis.singular_values(1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(basis.singular_values(2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("Eckart-Young: truncation residual equals the tail norm and beats random search") {
  Rng rng(5);
  const MatX a = random_matrix(rng, 8, 5);
  const auto basis = compute_pod_basis(wrap(a), 2);
  const MatX rec = basis.u_r * (basis.u_r.transpose() * a);
  const Scalar resid = (a - rec).norm();
  const VecX& s = basis.singular_values;
  const Scalar tail = std::sqrt(s(2) * s(2) + s(3) * s(3) + s(4) * s(4));
  CHECK(resid == doctest::Approx(tail).epsilon(1e-10));

  // no random rank-2 factorization out of 10000 beats the SVD truncation
  for (int trial = 0; trial < 10000; ++trial) {
    const MatX b = random_matrix(rng, 8, 2);
    const MatX coeff = b.colPivHouseholderQr().solve(a); // best coefficients
    CHECK((a - b * coeff).norm() >= resid * (1.0 - 1e-10));
  }
}

TEST_CASE("projection: zero, unit vectors, orthogonal residual") {
  Rng rng(7);
  const MatX a = random_matrix(rng, 12, 9);
  const auto basis = compute_pod_basis(wrap(a), 4);

  CHECK(project(basis, VecX::Zero(12)).isZero(0.0));

  for (int j = 0; j < basis.r; ++j) {
    const VecX z = project(basis, basis.u_r.col(j));
    VecX e = VecX::Zero(basis.r);
    e(j) = 1.0;
    CHECK((z - e).cwiseAbs().maxCoeff() <= 1e-12);
  }

  const VecX xi = random_matrix(rng, 12, 1);
  const VecX z = project(basis, xi);
  const VecX resid = xi - basis.u_r * z;
  CHECK((basis.u_r.transpose() * resid).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(z.norm() <= xi.norm() * (1.0 + 1e-12)); // non-expansive
}

TEST_CASE("project_rate is linear and finite-difference consistent") {
  Rng rng(11);
  const MatX data = random_matrix(rng, 10, 8);
  const auto basis = compute_pod_basis(wrap(data), 3);
  const VecX a = random_matrix(rng, 10, 1);
  const VecX b = random_matrix(rng, 10, 1);
  CHECK((project_rate(basis, a + b) - project_rate(basis, a) - project_rate(basis, b))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  CHECK((project(basis, a) - project(basis, b) - project_rate(basis, (a - b).eval()))
            .cwiseAbs()
            .maxCoeff() <= 1e-13);
}

TEST_CASE("reconstruct: full rank is exact, zero gives zero") {
  Rng rng(13);
  const MatX a = random_matrix(rng, 6, 10);
  const auto basis = compute_pod_basis(wrap(a), 6);
  const VecX xi = random_matrix(rng, 6, 1);
  CHECK((reconstruct(basis, project(basis, xi)) - xi).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(reconstruct(basis, VecX::Zero(6)).isZero(0.0));
}

TEST_CASE("basis columns are orthonormal and idempotent under projection") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 5 + static_cast<int>(rng.uniform() * 40);
    const int m = 3 + static_cast<int>(rng.uniform() * 30);
    const int r = 1 + static_cast<int>(rng.uniform() * (std::min(n, m) - 1));
    const auto basis = compute_pod_basis(wrap(random_matrix(rng, n, m)), r);
    const MatX gram = basis.u_r.transpose() * basis.u_r;
    CHECK((gram - MatX::Identity(r, r)).cwiseAbs().maxCoeff() <= 1e-10);
    const VecX z = random_matrix(rng, r, 1);
    CHECK((project(basis, reconstruct(basis, z)) - z).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("reconstruction error is hierarchical in r") {
  Rng rng(19);
  // correlated data so the spectrum decays
  const MatX mix = random_matrix(rng, 20, 4);
  const MatX coeff = random_matrix(rng, 4, 40);
  const MatX a = mix * coeff + 0.01 * random_matrix(rng, 20, 40);
  Scalar prev = -1.0;
  for (int r : {1, 2, 4, 8, 16}) {
    const auto basis = compute_pod_basis(wrap(a), r);
    const Scalar err = (a - basis.u_r * (basis.u_r.transpose() * a)).norm();
    if (prev >= 0.0)
      CHECK(err <= prev + 1e-12);
    prev = err;
  }
}

TEST_CASE("sign convention makes the basis deterministic") {
  Rng rng(23);
  const MatX a = random_matrix(rng, 15, 12);
  const auto b1 = compute_pod_basis(wrap(a), 5);
  const auto b2 = compute_pod_basis(wrap(a), 5);
  CHECK((b1.u_r - b2.u_r).cwiseAbs().maxCoeff() == 0.0);
  CHECK(b1.fingerprint() == b2.fingerprint());
  for (int j = 0; j < 5; ++j) {
    Eigen::Index imax = 0;
    b1.u_r.col(j).cwiseAbs().maxCoeff(&imax);
    CHECK(b1.u_r(imax, j) > 0.0);
  }
}

TEST_CASE("gram-route SVD agrees with Eigen's direct SVD") {
  Rng rng(29);
  for (auto [n, m] : {std::pair{30, 9}, std::pair{9, 30}}) {
    const MatX a = random_matrix(rng, n, m);
    const auto basis = compute_pod_basis(wrap(a), std::min(n, m));
    Eigen::JacobiSVD<MatX> svd(a, Eigen::ComputeThinU);
    for (int i = 0; i < std::min(n, m); ++i)
      CHECK(basis.singular_values(i) ==
            doctest::Approx(svd.singularValues()(i)).epsilon(1e-10));
    // same one-dimensional subspaces for a simple spectrum
    for (int j = 0; j < basis.r; ++j)
      CHECK(std::abs(basis.u_r.col(j).dot(svd.matrixU().col(j))) ==
            doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("rank bounds raise RankTooLarge") {
  Rng rng(31);
  const auto snap = wrap(random_matrix(rng, 6, 4));
  CHECK_THROWS_AS(compute_pod_basis(snap, 0), RankTooLarge);
  CHECK_THROWS_AS(compute_pod_basis(snap, 5), RankTooLarge);
}

TEST_CASE("layout mismatch raises") {
  Rng rng(37);
  const auto basis = compute_pod_basis(wrap(random_matrix(rng, 8, 5)), 2);
  CHECK_THROWS_AS(project(basis, VecX::Zero(9)), LayoutMismatch);
}

TEST_CASE("compression ratio reproduces the reference arithmetic") {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", compression_ratio(25, 138775));
  CHECK(std::string(buf) == "99.98");
  std::snprintf(buf, sizeof(buf), "%.2f", compression_ratio(25, 92703));
  CHECK(std::string(buf) == "99.97");
  CHECK(compression_ratio(10, 10) == 0.0);
}

TEST_CASE("singular-threshold mode selection") {
  VecX s(3);
  s << 1.0, 0.5, 1e-5;
  CHECK(select_modes_by_singular_threshold(s, 1e-4) == 2);
  VecX flat = VecX::Constant(7, 2.0);
  CHECK(select_modes_by_singular_threshold(flat, 1e-4) == 7);
}

TEST_CASE("energy reconstruction error: full rank exact, monotone means") {
  Rng rng(41);
  const MatX mix = random_matrix(rng, 18, 3);
  const MatX coeff = random_matrix(rng, 3, 30);
  const MatX a = mix * coeff + 0.05 * random_matrix(rng, 18, 30);
  const auto snap = wrap(a);
  const auto energy = [](const VecX& xi) { return 0.5 * xi.squaredNorm(); };

  const auto rows = energy_reconstruction_error(snap, {2, 4, 8, 18}, energy);
  Scalar prev = std::numeric_limits<Scalar>::max();
  for (const auto& row : rows) {
    CHECK(row.mean_abs_err <= prev + 1e-12);
    prev = row.mean_abs_err;
  }
  CHECK(rows.back().mean_abs_err <= 1e-12);
  CHECK(std::abs(rows.back().mean_err) <= 1e-12);
}

TEST_CASE("weighted basis projects in the scaled space and reconstructs back") {
  Rng rng(43);
  const MatX a = random_matrix(rng, 6, 10);
  VecX w(6);
  for (int i = 0; i < 6; ++i)
    w(i) = rng.uniform(0.5, 2.0);
  // spanning basis: the weighted round trip must be the identity
  const auto basis = compute_pod_basis_weighted(wrap(a), 6, w);
  const VecX xi = random_matrix(rng, 6, 1);
  CHECK((reconstruct(basis, project(basis, xi)) - xi).cwiseAbs().maxCoeff() <= 1e-9);
  // truncated: reconstruction residual is orthogonal in the weighted space
  const auto trunc = compute_pod_basis_weighted(wrap(a), 3, w);
  const VecX resid = w.asDiagonal() * (xi - reconstruct(trunc, project(trunc, xi)));
  CHECK((trunc.u_r.transpose() * resid).cwiseAbs().maxCoeff() <= 1e-10);
}

} // TEST_SUITE
