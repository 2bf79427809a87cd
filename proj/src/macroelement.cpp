#include "podtann/macroelement.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace podtann::macro {

void IwanSystem::validate() const {
  const int n = n_el();
  if (n < 1)
    throw ConfigError("IwanSystem: no elements");
  if (slip_force.size() != n || hardening.size() != n || slip.size() != n ||
      slip_max.size() != n)
    throw ConfigError("IwanSystem: array sizes mismatch");
  if ((stiffness.array() <= 0.0).any())
    throw ConfigError("IwanSystem: stiffnesses must be positive");
  if ((slip_force.array() <= 0.0).any())
    throw ConfigError("IwanSystem: slip forces must be positive");
  if ((hardening.array() < 0.0).any())
    throw ConfigError("IwanSystem: hardening moduli must be non-negative");
}

void IwanSystem::reset_state() {
  slip.setZero();
  slip_max.setZero();
  u = 0.0;
}

Scalar IwanSystem::total_force() const {
  return (stiffness.array() * (u - slip.array())).sum();
}

Scalar IwanSystem::helmholtz() const {
  return 0.5 * (stiffness.array() * (u - slip.array()).square()).sum() +
         0.5 * (hardening.array() * slip_max.array().square()).sum();
}

Scalar IwanSystem::capacity() const {
  if ((hardening.array() > 0.0).any())
    return std::numeric_limits<Scalar>::infinity();
  return slip_force.sum();
}

IwanSystem IwanSystem::random(int n_el, std::uint64_t seed, Scalar k_mean, Scalar k_spread,
                              Scalar fy_mean, Scalar fy_spread, Scalar h_over_k) {
  Rng rng(seed);
  IwanSystem sys;
  sys.stiffness.resize(n_el);
  sys.slip_force.resize(n_el);
  sys.hardening.resize(n_el);
  sys.slip = VecX::Zero(n_el);
  sys.slip_max = VecX::Zero(n_el);
  for (int i = 0; i < n_el; ++i) {
    sys.stiffness(i) = k_mean * (1.0 + k_spread * (2.0 * rng.uniform() - 1.0));
    sys.slip_force(i) = fy_mean * (1.0 + fy_spread * (2.0 * rng.uniform() - 1.0));
    sys.hardening(i) = h_over_k * sys.stiffness(i);
  }
  sys.validate();
  return sys;
}

namespace {

struct ElementReturn {
  Scalar force;
  Scalar slip;
  Scalar slip_max;
  Scalar tangent;
  bool sliding;
};

// Closed-form return of one element for a given total displacement.
ElementReturn element_return(Scalar k, Scalar fy, Scalar h, Scalar s_old, Scalar kappa_old,
                             Scalar u) {
  ElementReturn out;
  const Scalar f_trial = k * (u - s_old);
  const Scalar threshold = fy + h * kappa_old;
  if (std::abs(f_trial) <= threshold) {
    out.force = f_trial;
    out.slip = s_old;
    out.slip_max = kappa_old;
    out.tangent = k;
    out.sliding = false;
    return out;
  }
  const Scalar sgn = f_trial > 0.0 ? 1.0 : -1.0;
  // slide at the current threshold first (kappa frozen)
  Scalar s_new = u - sgn * threshold / k;
  if (std::abs(s_new) <= kappa_old + 1e-15 * (1.0 + kappa_old)) {
    out.force = sgn * threshold;
    out.slip = s_new;
    out.slip_max = kappa_old;
    out.tangent = 0.0;
    out.sliding = true;
    return out;
  }
  // slip grows past the stored maximum: kappa follows |s|, the threshold
  // hardens while sliding; consistency |k (u - s)| = fy + h |s|
  s_new = (k * u - sgn * fy) / (k + h);
  out.force = k * (u - s_new);
  out.slip = s_new;
  out.slip_max = std::abs(s_new);
  out.tangent = k * h / (k + h);
  out.sliding = true;
  return out;
}

struct SystemReturn {
  Scalar force;
  Scalar tangent;
};

SystemReturn system_force(const IwanSystem& sys, Scalar u, VecX& slip_new, VecX& kappa_new) {
  SystemReturn out{0.0, 0.0};
  for (int i = 0; i < sys.n_el(); ++i) {
    const ElementReturn er = element_return(sys.stiffness(i), sys.slip_force(i),
                                            sys.hardening(i), sys.slip(i), sys.slip_max(i), u);
    out.force += er.force;
    out.tangent += er.tangent;
    slip_new(i) = er.slip;
    kappa_new(i) = er.slip_max;
  }
  return out;
}

// Solve F_total(u) = f_target for one increment; monotone piecewise-linear
// residual, Newton safeguarded by expanding-bracket bisection.
Scalar solve_displacement(const IwanSystem& sys, Scalar f_target, Scalar u_start, VecX& slip_new,
                          VecX& kappa_new) {
  const Scalar f_scale = sys.slip_force.sum() + std::abs(f_target) + 1.0;
  const Scalar tol = 1e-12 * f_scale;

  Scalar u = u_start;
  SystemReturn sr = system_force(sys, u, slip_new, kappa_new);
  if (std::abs(sr.force - f_target) <= tol)
    return u;

  // bracket the root
  const Scalar k_total = sys.stiffness.sum();
  Scalar step = std::max(std::abs(sr.force - f_target) / k_total, 1e-12);
  Scalar u_lo = u, u_hi = u;
  Scalar f_lo = sr.force, f_hi = sr.force;
  for (int it = 0; it < 200 && ((f_lo > f_target) == (f_hi > f_target)); ++it) {
    if (f_lo > f_target) {
      u_lo -= step;
      f_lo = system_force(sys, u_lo, slip_new, kappa_new).force;
    } else {
      u_hi += step;
      f_hi = system_force(sys, u_hi, slip_new, kappa_new).force;
    }
    step *= 2.0;
  }
  if ((f_lo > f_target) == (f_hi > f_target))
    throw CapacityExceeded("simulate_iwan: force target outside the attainable range");

  for (int it = 0; it < 200; ++it) {
    sr = system_force(sys, u, slip_new, kappa_new);
    const Scalar resid = sr.force - f_target;
    if (std::abs(resid) <= tol)
      return u;
    if (resid > 0.0)
      u_hi = std::min(u_hi, u);
    else
      u_lo = std::max(u_lo, u);
    Scalar u_next = sr.tangent > 1e-12 * k_total ? u - resid / sr.tangent : u;
    if (!(u_next > u_lo && u_next < u_hi))
      u_next = 0.5 * (u_lo + u_hi);
    u = u_next;
  }
  throw NonConvergence("simulate_iwan: displacement solve did not converge");
}

MacroSample advance(IwanSystem& sys, Scalar u_new, const VecX& slip_new, const VecX& kappa_new,
                    Scalar f_new) {
  MacroSample s;
  // midpoint element forces keep the discrete first law exact
  Scalar d_inc = 0.0;
  for (int i = 0; i < sys.n_el(); ++i) {
    const Scalar f_old_i = sys.stiffness(i) * (sys.u - sys.slip(i));
    const Scalar f_new_i = sys.stiffness(i) * (u_new - slip_new(i));
    const Scalar kappa_mid = 0.5 * (sys.slip_max(i) + kappa_new(i));
    d_inc += 0.5 * (f_old_i + f_new_i) * (slip_new(i) - sys.slip(i)) -
             sys.hardening(i) * kappa_mid * (kappa_new(i) - sys.slip_max(i));
  }
  sys.u = u_new;
  sys.slip = slip_new;
  sys.slip_max = kappa_new;

  s.f_h = f_new;
  s.u_h = u_new;
  s.psi = sys.helmholtz();
  s.phi = s.psi - s.f_h * s.u_h;
  s.d_inc = d_inc;
  return s;
}

void store_ics(MacroRecord& rec, const IwanSystem& sys, int t) {
  const int n = sys.n_el();
  for (int i = 0; i < n; ++i) {
    rec.xi(3 * i, t) = sys.u - sys.slip(i);
    rec.xi(3 * i + 1, t) = sys.slip(i);
    rec.xi(3 * i + 2, t) = sys.slip_max(i);
  }
}

} // namespace

MacroRecord simulate_iwan(IwanSystem& sys, const VecX& force_path) {
  sys.validate();
  const int n = static_cast<int>(force_path.size());
  const Scalar cap = sys.capacity();

  MacroRecord rec;
  rec.layout = pod::LayoutDescriptor::iwan(sys.n_el());
  rec.samples.reserve(n);
  rec.xi.resize(3 * sys.n_el(), n);

  VecX slip_new(sys.n_el()), kappa_new(sys.n_el());
  for (int t = 0; t < n; ++t) {
    const Scalar f_target = force_path(t);
    if (std::isfinite(cap) && std::abs(f_target) >= cap)
      throw CapacityExceeded("simulate_iwan: increment " + std::to_string(t) +
                             " exceeds the system capacity");
    const Scalar u_new = solve_displacement(sys, f_target, sys.u, slip_new, kappa_new);
    rec.samples.push_back(advance(sys, u_new, slip_new, kappa_new, f_target));
    store_ics(rec, sys, t);
  }
  return rec;
}

MacroRecord simulate_iwan_displacement(IwanSystem& sys, const VecX& displacement_path) {
  sys.validate();
  const int n = static_cast<int>(displacement_path.size());

  MacroRecord rec;
  rec.layout = pod::LayoutDescriptor::iwan(sys.n_el());
  rec.samples.reserve(n);
  rec.xi.resize(3 * sys.n_el(), n);

  VecX slip_new(sys.n_el()), kappa_new(sys.n_el());
  for (int t = 0; t < n; ++t) {
    const Scalar u_new = displacement_path(t);
    const SystemReturn sr = system_force(sys, u_new, slip_new, kappa_new);
    rec.samples.push_back(advance(sys, u_new, slip_new, kappa_new, sr.force));
    store_ics(rec, sys, t);
  }
  return rec;
}

VecX random_force_path(Rng& rng, int n_inc, Scalar max_amplitude) {
  VecX path(n_inc);
  for (int t = 0; t < n_inc; ++t)
    path(t) = rng.uniform(-max_amplitude, max_amplitude);
  return path;
}

Scalar safe_amplitude(const IwanSystem& sys, Scalar fraction) {
  const Scalar cap = sys.capacity();
  if (!std::isfinite(cap))
    return fraction * sys.slip_force.sum();
  return fraction * cap;
}

Dataset build_macro_dataset(const std::vector<MacroRecord>& records,
                            const pod::PodBasis& basis) {
  if (records.empty())
    throw ConfigError("build_macro_dataset: no records");
  int total = 0;
  for (const auto& rec : records) {
    if (rec.xi.rows() != basis.u_r.rows())
      throw LayoutMismatch("build_macro_dataset: basis row count mismatch");
    if (rec.layout.fingerprint() != basis.layout_fingerprint)
      throw LayoutMismatch("build_macro_dataset: basis was built for a different layout");
    total += rec.n_inc();
  }

  Dataset ds;
  const int r = basis.r;
  ds.cv.resize(1, total);
  ds.z.resize(r, total);
  ds.zdot.resize(r, total);
  ds.conj.resize(1, total);
  ds.pot.resize(total);
  ds.diss.resize(total);
  ds.group.resize(total);
  ds.record.resize(total);
  ds.basis_fingerprint = basis.fingerprint();

  int col = 0;
  int fallback_group = 0;
  int record_id = 0;
  for (const auto& rec : records) {
    VecX prev = VecX::Zero(rec.xi.rows());
    const int group = rec.group >= 0 ? rec.group : fallback_group;
    for (int t = 0; t < rec.n_inc(); ++t, ++col) {
      const auto& s = rec.samples[t];
      ds.cv(0, col) = s.f_h;
      ds.conj(0, col) = s.u_h;
      ds.pot(col) = s.phi;
      ds.diss(col) = s.d_inc;
      const VecX xi = rec.xi.col(t);
      ds.z.col(col) = pod::project(basis, xi);
      ds.zdot.col(col) = pod::project_rate(basis, xi - prev);
      prev = xi;
      ds.group[col] = group;
      ds.record[col] = record_id;
    }
    ++fallback_group;
    ++record_id;
  }
  ds.scalers = fit_scalers(ds);
  ds.validate();
  return ds;
}

tann::TrainResult train_macro(const Dataset& ds, const tann::TrainConfig& cfg) {
  if (ds.n_cv() != 1)
    throw ConfigError("train_macro: expected a single generalized force input");
  return tann::train(ds, cfg, /*conj_sign=*/-1.0);
}

pod::SnapshotMatrix gather_macro_snapshots(const std::vector<MacroRecord>& records) {
  if (records.empty())
    throw ConfigError("gather_macro_snapshots: no records");
  const auto layout = records.front().layout;
  int total = 0;
  for (const auto& rec : records) {
    if (rec.layout.fingerprint() != layout.fingerprint())
      throw LayoutMismatch("gather_macro_snapshots: records use different layouts");
    total += rec.n_inc();
  }
  pod::SnapshotMatrix snap;
  snap.layout = layout;
  snap.data.resize(layout.n_dof(), total);
  int col = 0;
  for (const auto& rec : records) {
    snap.data.middleCols(col, rec.n_inc()) = rec.xi;
    col += rec.n_inc();
  }
  return snap;
}

} // namespace podtann::macro
