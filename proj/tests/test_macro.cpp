#include "podtann/macroelement.hpp"

#include "podtann/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace podtann;
using namespace podtann::macro;

namespace {

IwanSystem single_element(Scalar k, Scalar fy, Scalar h) {
  IwanSystem sys;
  sys.stiffness = VecX::Constant(1, k);
  sys.slip_force = VecX::Constant(1, fy);
  sys.hardening = VecX::Constant(1, h);
  sys.slip = VecX::Zero(1);
  sys.slip_max = VecX::Zero(1);
  return sys;
}

// Virgin-loading backbone displacement for a given force (h = 0 systems):
// inverse of F(u) = sum_i min(k_i u, f_i) on u >= 0, by bisection.
Scalar backbone_displacement(const IwanSystem& sys, Scalar force) {
  Scalar lo = 0.0, hi = 1.0;
  auto f_of = [&](Scalar u) {
    Scalar f = 0.0;
    for (int i = 0; i < sys.n_el(); ++i)
      f += std::min(sys.stiffness(i) * u, sys.slip_force(i));
    return f;
  };
  while (f_of(hi) < force)
    hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const Scalar mid = 0.5 * (lo + hi);
    (f_of(mid) < force ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

TEST_SUITE("macro") {

TEST_CASE("elastic ramp: linear force-displacement, zero dissipation") {
  auto sys = single_element(100.0, 5.0, 0.0);
  const VecX path = VecX::LinSpaced(10, 0.4, 4.0);
  const auto rec = simulate_iwan(sys, path);
  for (int t = 0; t < 10; ++t) {
    CHECK(rec.samples[t].u_h == doctest::Approx(path(t) / 100.0).epsilon(1e-12));
    CHECK(rec.samples[t].d_inc == doctest::Approx(0.0));
    CHECK(rec.samples[t].psi ==
          doctest::Approx(0.5 * path(t) * path(t) / 100.0).epsilon(1e-12));
    CHECK(rec.samples[t].phi ==
          doctest::Approx(-0.5 * path(t) * path(t) / 100.0).epsilon(1e-12));
  }
}

TEST_CASE("perfectly plastic element: bilinear curve with zero post-yield slope") {
  auto sys = single_element(100.0, 5.0, 0.0);
  // displacement-driven ramp past the yield displacement 0.05
  const VecX u_path = VecX::LinSpaced(20, 0.01, 0.2);
  const auto rec = simulate_iwan_displacement(sys, u_path);
  for (int t = 0; t < 20; ++t) {
    const Scalar u = u_path(t);
    const Scalar f_expect = std::min(100.0 * u, 5.0);
    CHECK(rec.samples[t].f_h == doctest::Approx(f_expect).epsilon(1e-12));
  }
  // post-yield slope is zero: forces at the last two steps are equal
  CHECK(rec.samples[19].f_h == doctest::Approx(rec.samples[18].f_h).epsilon(1e-14));
  // dissipation flows once sliding starts
  CHECK(rec.samples[19].d_inc > 0.0);
}

TEST_CASE("hardening element: post-yield tangent k h/(k+h)") {
  auto sys = single_element(100.0, 5.0, 25.0);
  const VecX u_path = VecX::LinSpaced(40, 0.005, 0.2);
  const auto rec = simulate_iwan_displacement(sys, u_path);
  const Scalar du = u_path(1) - u_path(0);
  const Scalar tangent =
      (rec.samples[39].f_h - rec.samples[38].f_h) / du;
  CHECK(tangent == doctest::Approx(100.0 * 25.0 / 125.0).epsilon(1e-10));
  // threshold consistency: |F| <= fy + h kappa
  for (int t = 0; t < 40; ++t) {
    const Scalar f_el = rec.xi(0, t) * 100.0;
    CHECK(std::abs(f_el) <= 5.0 + 25.0 * rec.xi(2, t) + 1e-9);
  }
}

TEST_CASE("Masing rule: unloading branch follows the doubled backbone") {
  const auto base = IwanSystem::random(40, 99, 100.0, 0.6, 1.0, 0.7, 0.0);
  IwanSystem sys = base;
  const Scalar f_star = safe_amplitude(sys, 0.6);
  // load to +f*, then unload/reverse to -f* in fine force steps
  const int n_half = 400;
  std::vector<Scalar> forces;
  for (int t = 1; t <= n_half; ++t)
    forces.push_back(f_star * t / n_half);
  for (int t = 1; t <= 2 * n_half; ++t)
    forces.push_back(f_star - 2.0 * f_star * t / (2 * n_half));
  VecX path(forces.size());
  for (std::size_t i = 0; i < forces.size(); ++i)
    path(i) = forces[i];
  const auto rec = simulate_iwan(sys, path);

  const Scalar u_star = rec.samples[n_half - 1].u_h;
  for (int t = n_half; t < 3 * n_half; ++t) {
    const Scalar f = path(t);
    const Scalar expect = u_star - 2.0 * backbone_displacement(base, (f_star - f) / 2.0);
    CHECK(rec.samples[t].u_h == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("discrete system first law and non-negative dissipation") {
  IwanSystem sys = IwanSystem::random(60, 7, 100.0, 0.5, 1.0, 0.5, 0.05);
  Rng rng(13);
  const VecX path = random_force_path(rng, 500, safe_amplitude(sys, 0.8));
  Scalar u_prev = 0.0, psi_prev = 0.0, f_prev = 0.0;
  const auto rec = simulate_iwan(sys, path);
  for (int t = 0; t < 500; ++t) {
    const auto& s = rec.samples[t];
    CHECK(s.d_inc >= -1e-12);
    const Scalar f_mid = 0.5 * (f_prev + s.f_h);
    const Scalar resid = f_mid * (s.u_h - u_prev) - (s.psi - psi_prev) - s.d_inc;
    const Scalar scale = std::abs(s.psi) + std::abs(f_mid * (s.u_h - u_prev)) + 1e-12;
    CHECK(std::abs(resid) <= 1e-8 * scale);
    // Legendre consistency of the stored Gibbs energy
    CHECK(s.psi - s.phi == doctest::Approx(s.f_h * s.u_h).epsilon(1e-12));
    u_prev = s.u_h;
    psi_prev = s.psi;
    f_prev = s.f_h;
  }
}

TEST_CASE("capacity: force beyond the slider sum throws with the increment index") {
  auto sys = single_element(100.0, 5.0, 0.0);
  VecX path(3);
  path << 2.0, 4.0, 6.0;
  CHECK_THROWS_AS(simulate_iwan(sys, path), CapacityExceeded);
  try {
    auto fresh = single_element(100.0, 5.0, 0.0);
    simulate_iwan(fresh, path);
  } catch (const CapacityExceeded& e) {
    CHECK(std::string(e.what()).find("increment 2") != std::string::npos);
  }
}

TEST_CASE("macro dataset: layout, rates, and Gibbs consistency") {
  IwanSystem sys = IwanSystem::random(20, 21, 100.0, 0.5, 1.0, 0.5, 0.0);
  Rng rng(23);
  std::vector<MacroRecord> records;
  for (int p = 0; p < 3; ++p) {
    IwanSystem fresh = sys;
    auto rec = simulate_iwan(fresh, random_force_path(rng, 150, safe_amplitude(sys, 0.7)));
    rec.group = p;
    records.push_back(std::move(rec));
  }
  const auto snap = gather_macro_snapshots(records);
  CHECK(snap.n_dof() == 60);
  CHECK(snap.n_snap() == 450);

  const auto basis = pod::compute_pod_basis(snap, 30);
  const auto ds = build_macro_dataset(records, basis);
  CHECK(ds.n_cv() == 1);
  CHECK(ds.n_samples() == 450);
  // rates telescope within records
  for (int t = 1; t < 150; ++t)
    CHECK((ds.z.col(t) - ds.z.col(t - 1) - ds.zdot.col(t)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("reconstructed slip fields improve monotonically with r") {
  IwanSystem sys = IwanSystem::random(50, 31, 100.0, 0.5, 1.0, 0.5, 0.0);
  Rng rng(37);
  std::vector<MacroRecord> records;
  for (int p = 0; p < 4; ++p) {
    IwanSystem fresh = sys;
    records.push_back(
        simulate_iwan(fresh, random_force_path(rng, 200, safe_amplitude(sys, 0.8))));
  }
  const auto snap = gather_macro_snapshots(records);
  Scalar prev = std::numeric_limits<Scalar>::max();
  for (int r : {5, 10, 25, 50}) {
    const auto basis = pod::compute_pod_basis(snap, r);
    Scalar mae = 0.0;
    for (int j = 0; j < snap.n_snap(); ++j) {
      const VecX xi = snap.data.col(j);
      mae += (xi - pod::reconstruct(basis, pod::project(basis, xi))).cwiseAbs().mean();
    }
    mae /= static_cast<Scalar>(snap.n_snap());
    CHECK(mae <= prev + 1e-15);
    prev = mae;
  }
}

TEST_CASE("elastic Iwan system: trained Gibbs model reproduces displacements") {
  // strengths far above the force amplitude keep every slider stuck
  IwanSystem sys = IwanSystem::random(10, 41, 100.0, 0.5, 1e6, 0.0, 0.0);
  Rng rng(43);
  std::vector<MacroRecord> records;
  for (int p = 0; p < 6; ++p) {
    IwanSystem fresh = sys;
    auto rec = simulate_iwan(fresh, random_force_path(rng, 120, 300.0));
    rec.group = p;
    records.push_back(std::move(rec));
  }
  const auto snap = gather_macro_snapshots(records);
  const auto basis = pod::compute_pod_basis(snap, 3);
  const auto ds = build_macro_dataset(records, basis);

  tann::TrainConfig cfg;
  cfg.hidden = 16;
  cfg.learning_rate = 5e-3;
  cfg.batch = 120;
  cfg.epochs = 3000;
  cfg.seed = 3;
  const auto res = train_macro(ds, cfg);

  Scalar mae = 0.0;
  int n = 0;
  for (int i = 0; i < ds.n_samples(); ++i) {
    const bool val = std::find(res.val_groups.begin(), res.val_groups.end(), ds.group[i]) !=
                     res.val_groups.end();
    if (!val)
      continue;
    const VecX pred = displacement_from_gibbs(res.model, ds.cv(0, i), ds.z.col(i));
    mae += std::abs(pred(0) - ds.conj(0, i)) / ds.scalers.h_conj(0);
    ++n;
  }
  mae /= static_cast<Scalar>(n);
  CHECK(mae <= 1e-4);
}

TEST_CASE("singular-threshold selection stays moderate on Iwan data") {
  IwanSystem sys = IwanSystem::random(200, 47, 100.0, 0.5, 1.0, 0.5, 0.0);
  Rng rng(53);
  std::vector<MacroRecord> records;
  for (int p = 0; p < 3; ++p) {
    IwanSystem fresh = sys;
    records.push_back(
        simulate_iwan(fresh, random_force_path(rng, 250, safe_amplitude(sys, 0.8))));
  }
  const auto snap = gather_macro_snapshots(records);
  const auto basis = pod::compute_pod_basis(snap, 1);
  const int r = pod::select_modes_by_singular_threshold(basis.singular_values, 1e-4);
  CHECK(r <= 120);
  CHECK(r >= 1);
}

TEST_CASE("Gibbs displacement is the exact negative force-gradient") {
  Rng rng(61);
  auto model = tann::make_energy_model(1, 4, 12, 7, Scalers::identity(1, 4), -1.0);
  for (int i = 0; i < 12; ++i)
    model.net.b1(i) = 0.3 * rng.normal();
  model.scalers.h_in << 2.0, 0.7, 1.3, 0.9, 1.1;
  model.scalers.h_conj << 0.4;
  model.scalers.s_pot = 1.7;
  VecX z(4);
  for (int j = 0; j < 4; ++j)
    z(j) = 0.4 * rng.normal();
  const Scalar f = 0.8;
  const Scalar u = displacement_from_gibbs(model, f, z)(0);
  const Scalar h = 1e-6;
  VecX fp(1), fm(1);
  fp(0) = f + h;
  fm(0) = f - h;
  const Scalar fd =
      -(tann::forward_energy(model, fp, z) - tann::forward_energy(model, fm, z)) / (2.0 * h);
  CHECK(std::abs(u - fd) <= 1e-6 * (std::abs(fd) + 1.0));
}

} // TEST_SUITE
