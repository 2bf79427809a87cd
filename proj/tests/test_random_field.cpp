#include "podtann/random_field.hpp"

#include "podtann/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace podtann;
using namespace podtann::field;

TEST_SUITE("random_field") {

TEST_CASE("wave numbers follow the standard fft frequency layout") {
  const VecX k = wave_numbers(8, 0.5);
  CHECK(k(0) == 0.0);
  CHECK(k(1) == doctest::Approx(2.0 * M_PI / 4.0));
  CHECK(k(4) == doctest::Approx(-2.0 * M_PI * 4.0 / 4.0));
  CHECK(k(7) == doctest::Approx(-2.0 * M_PI / 4.0));
}

TEST_CASE("generation is deterministic per seed") {
  GridSpec g{2.0, 2.0, 2.0, 8, 8, 8};
  const auto f1 = generate_correlated_field(g, 5.0, 42);
  const auto f2 = generate_correlated_field(g, 5.0, 42);
  CHECK((f1.values - f2.values).cwiseAbs().maxCoeff() == 0.0);
  const auto f3 = generate_correlated_field(g, 5.0, 43);
  CHECK((f1.values - f3.values).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("construction is exactly circulant: shifted noise gives the shifted field") {
  GridSpec g{1.0, 1.0, 1.0, 6, 5, 4};
  const Scalar kappa = 8.0;
  const VecX noise = white_noise(g, 7);
  const auto base = correlate_noise(g, kappa, noise);

  auto idx = [&](int ix, int iy, int iz) {
    return (static_cast<std::int64_t>(ix) * g.ny + iy) * g.nz + iz;
  };
  // shift the noise one cell along each axis in turn
  const int sx = 2, sy = 1, sz = 3;
  VecX shifted_noise(g.cells());
  for (int ix = 0; ix < g.nx; ++ix)
    for (int iy = 0; iy < g.ny; ++iy)
      for (int iz = 0; iz < g.nz; ++iz)
        shifted_noise(idx(ix, iy, iz)) =
            noise(idx((ix + sx) % g.nx, (iy + sy) % g.ny, (iz + sz) % g.nz));

  const auto shifted = correlate_noise(g, kappa, shifted_noise);
  Scalar max_diff = 0.0;
  for (int ix = 0; ix < g.nx; ++ix)
    for (int iy = 0; iy < g.ny; ++iy)
      for (int iz = 0; iz < g.nz; ++iz)
        max_diff = std::max(max_diff,
                            std::abs(shifted.values(idx(ix, iy, iz)) -
                                     base.values(idx((ix + sx) % g.nx, (iy + sy) % g.ny,
                                                     (iz + sz) % g.nz))));
  CHECK(max_diff <= 1e-12 * base.values.cwiseAbs().maxCoeff());
}

TEST_CASE("flat PSD gives white noise: lag-1 autocorrelation near zero") {
  GridSpec g{100.0, 100.0, 100.0, 100, 100, 100};
  const auto f = generate_correlated_field(g, 1e9, 11);
  const auto acov = empirical_autocovariance(f);
  // lag-1 along z is element index 1; normalize by lag 0
  CHECK(std::abs(acov(1) / acov(0)) < 0.05);
}

TEST_CASE("imaginary residue of the construction stays at round-off") {
  GridSpec g{3.0, 2.0, 1.0, 9, 6, 5}; // odd sizes included
  const auto f = generate_correlated_field(g, 4.0, 3);
  CHECK(f.values.allFinite());
}

TEST_CASE("scale_field hits the targets exactly and is affine") {
  GridSpec g{2.0, 2.0, 2.0, 8, 8, 8};
  const auto f = generate_correlated_field(g, 5.0, 21);
  const auto scaled = scale_field(f, 18000.0, 5000.0);
  CHECK(scaled.mean() == doctest::Approx(18000.0).epsilon(1e-12));
  CHECK(scaled.std_dev() == doctest::Approx(5000.0).epsilon(1e-12));

  // identity scaling leaves the field unchanged
  const auto same = scale_field(f, f.mean(), f.std_dev());
  CHECK((same.values - f.values).cwiseAbs().maxCoeff() <= 1e-12 * f.values.cwiseAbs().maxCoeff());

  // zero target std collapses to a constant
  const auto flat = scale_field(f, 3.0, 0.0);
  CHECK((flat.values.array() - 3.0).abs().maxCoeff() <= 1e-12);

  // argmax cell is invariant (order preserving)
  Eigen::Index i1 = 0, i2 = 0;
  f.values.maxCoeff(&i1);
  scaled.values.maxCoeff(&i2);
  CHECK(i1 == i2);

  FieldSample degenerate = f;
  degenerate.values.setConstant(1.0);
  CHECK_THROWS_AS(scale_field(degenerate, 0.0, 1.0), DegenerateField);
}

TEST_CASE("empirical radial autocorrelation matches the inverse-PSD curve") {
  GridSpec g{4.0, 4.0, 4.0, 24, 24, 24};
  const Scalar kappa = 5.0;
  const VecX th = theoretical_autocovariance(g, kappa);
  VecX mean_acov = VecX::Zero(g.cells());
  const int n_real = 50;
  for (int s = 0; s < n_real; ++s) {
    const auto f = generate_correlated_field(g, kappa, 1000 + s);
    const VecX acov = empirical_autocovariance(f);
    mean_acov += acov / acov(0);
  }
  mean_acov /= static_cast<Scalar>(n_real);

  const auto p_emp = radial_profile(mean_acov, g, 1.5);
  const auto p_th = radial_profile(th, g, 1.5);
  REQUIRE(p_emp.lag.size() == p_th.lag.size());
  Scalar rms = 0.0;
  for (std::size_t i = 0; i < p_emp.lag.size(); ++i) {
    const Scalar d = p_emp.value[i] - p_th.value[i];
    rms += d * d;
  }
  rms = std::sqrt(rms / static_cast<Scalar>(p_emp.lag.size()));
  CHECK(rms <= 0.05);
}

TEST_CASE("assign_properties: constant fields give a homogeneous ensemble") {
  GridSpec g{1.0, 1.0, 1.0, 3, 3, 3};
  FieldSample e;
  e.grid = g;
  e.values = VecX::Constant(27, 18000.0);
  const auto base = plasticity::MaterialParams::drucker_prager(5500, 0.3, 10, 32, 32, 4000);
  const auto res = assign_properties(base, {{"E", e}});
  CHECK(static_cast<int>(res.params.size()) == 27);
  for (const auto& p : res.params) {
    CHECK(p.e_mod == 18000.0);
    CHECK(p.nu == 0.3);
    CHECK(p.phi == 32.0);
  }
  CHECK(res.clip_counts.empty());
}

TEST_CASE("assign_properties: narrow nu field is never clipped, mismatched grids throw") {
  GridSpec g{2.0, 2.0, 2.0, 8, 8, 8};
  const auto raw = generate_correlated_field(g, 5.0, 33);
  const auto nu = scale_field(raw, 0.3, 0.01);
  const auto base = plasticity::MaterialParams::drucker_prager(5500, 0.3, 10, 32, 32, 4000);
  const auto res = assign_properties(base, {{"nu", nu}});
  CHECK(res.clip_counts.empty()); // ~20 sigma from the bounds

  FieldSample other = nu;
  other.grid.nx = 4;
  CHECK_THROWS_AS(assign_properties(base, {{"nu", nu}, {"E", other}}), GridMismatch);
}

TEST_CASE("sampled phi keeps the flow associative") {
  GridSpec g{1.0, 1.0, 1.0, 2, 2, 2};
  FieldSample phi;
  phi.grid = g;
  phi.values = VecX::LinSpaced(8, 20.0, 35.0);
  const auto base = plasticity::MaterialParams::drucker_prager(5500, 0.3, 10, 32, 32, 4000);
  const auto res = assign_properties(base, {{"phi", phi}});
  for (const auto& p : res.params)
    CHECK(p.phi == p.psi_dil);
}

} // TEST_SUITE
