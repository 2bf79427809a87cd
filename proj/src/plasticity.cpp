#include "podtann/plasticity.hpp"

#include "podtann/errors.hpp"

#include <cmath>

namespace podtann::plasticity {

namespace {

constexpr Scalar kDegToRad = M_PI / 180.0;
constexpr int kMaxReturnIter = 50;

} // namespace

void MaterialParams::validate() const {
  if (!(e_mod > 0.0))
    throw ConfigError("MaterialParams: E must be positive");
  if (!(nu > -1.0 && nu < 0.5))
    throw ConfigError("MaterialParams: nu must lie in (-1, 0.5)");
  if (hardening < 0.0)
    throw ConfigError("MaterialParams: H must be non-negative");
  if (c < 0.0)
    throw ConfigError("MaterialParams: cohesion must be non-negative");
  if (phi < 0.0 || phi >= 90.0)
    throw ConfigError("MaterialParams: phi must lie in [0, 90)");
  if (model == YieldModel::VonMises && !(su > 0.0))
    throw ConfigError("MaterialParams: Su must be positive for von Mises");
}

MaterialParams MaterialParams::von_mises(Scalar e_mod, Scalar nu, Scalar su, Scalar h) {
  MaterialParams p;
  p.e_mod = e_mod;
  p.nu = nu;
  p.model = YieldModel::VonMises;
  p.su = su;
  p.hardening = h;
  p.validate();
  return p;
}

MaterialParams MaterialParams::drucker_prager(Scalar e_mod, Scalar nu, Scalar c, Scalar phi_deg,
                                              Scalar psi_deg, Scalar h) {
  MaterialParams p;
  p.e_mod = e_mod;
  p.nu = nu;
  p.model = YieldModel::DruckerPrager;
  p.c = c;
  p.phi = phi_deg;
  p.psi_dil = psi_deg;
  p.hardening = h;
  p.validate();
  return p;
}

VecX PointState::flatten() const {
  VecX x(13);
  x.segment<6>(0) = eps_el;
  x.segment<6>(6) = eps_pl;
  x(12) = alpha;
  return x;
}

Scalar bulk_modulus(const MaterialParams& p) { return p.e_mod / (3.0 * (1.0 - 2.0 * p.nu)); }

Scalar shear_modulus(const MaterialParams& p) { return p.e_mod / (2.0 * (1.0 + p.nu)); }

Mat6 elastic_stiffness(const MaterialParams& p) {
  if (p.nu >= 0.5)
    throw ConfigError("elastic_stiffness: nu must be below 0.5");
  p.validate();
  const Scalar k = bulk_modulus(p);
  const Scalar g = shear_modulus(p);
  const Vec6 m = identity6();
  const Mat6 p_vol = (m * m.transpose()) / 3.0;
  const Mat6 p_dev = Mat6::Identity() - p_vol;
  return 3.0 * k * p_vol + 2.0 * g * p_dev;
}

DpConstants dp_params_from_mc(Scalar c, Scalar phi_deg) {
  const Scalar s = std::sin(phi_deg * kDegToRad);
  const Scalar cphi = std::cos(phi_deg * kDegToRad);
  const Scalar den = std::sqrt(3.0) * (3.0 - s);
  return {2.0 * s / den, 6.0 * c * cphi / den};
}

Vec6 stress(const MaterialParams& p, const Vec6& eps_el) {
  const Scalar k = bulk_modulus(p);
  const Scalar g = shear_modulus(p);
  const Scalar tr = eps_el(0) + eps_el(1) + eps_el(2);
  return 3.0 * k * (tr / 3.0) * identity6() + 2.0 * g * deviator(eps_el);
}

Scalar helmholtz(const MaterialParams& p, const PointState& s) {
  const Scalar k = bulk_modulus(p);
  const Scalar g = shear_modulus(p);
  const Scalar tr = s.eps_el(0) + s.eps_el(1) + s.eps_el(2);
  const Scalar psi_el = 0.5 * k * tr * tr + g * deviator(s.eps_el).squaredNorm();
  return psi_el + 0.5 * p.hardening * s.alpha * s.alpha;
}

Scalar yield_value(const MaterialParams& p, const Vec6& sigma, Scalar alpha) {
  const Invariants inv = invariants(sigma);
  if (p.model == YieldModel::VonMises)
    return inv.q - (std::sqrt(3.0) * p.su + p.hardening * alpha);
  const DpConstants dp = dp_params_from_mc(p.c, p.phi);
  return std::sqrt(inv.j2) + dp.alpha_dp * inv.i1 - (dp.k_dp + p.hardening * alpha);
}

namespace {

// Scalar consistency iteration. f(dgamma) is affine for linear hardening,
// so Newton lands in one step; the loop stays in place for the general
// contract (NonConvergence past kMaxReturnIter).
template <typename F, typename DF>
Scalar solve_consistency(F f, DF df, Scalar tol) {
  Scalar dgamma = 0.0;
  for (int it = 0; it < kMaxReturnIter; ++it) {
    const Scalar r = f(dgamma);
    if (std::abs(r) <= tol)
      return dgamma;
    dgamma -= r / df(dgamma);
  }
  throw NonConvergence("integrate_increment: plastic return did not converge");
}

} // namespace

IncrementResult integrate_increment(const MaterialParams& p, const PointState& state,
                                    const Vec6& d_eps) {
  p.validate();
  if (d_eps.norm() >= 0.05)
    throw SimulationError("integrate_increment: strain increment above small-strain scale");

  const Scalar k = bulk_modulus(p);
  const Scalar g = shear_modulus(p);
  const Scalar h = p.hardening;

  const Vec6 sigma_old = stress(p, state.eps_el);
  const Scalar psi_old = helmholtz(p, state);

  // elastic trial
  PointState trial = state;
  trial.eps_el += d_eps;
  Vec6 sigma_tr = stress(p, trial.eps_el);

  IncrementResult res;
  const Scalar yield_scale =
      p.model == YieldModel::VonMises ? (p.su + 1.0) : (p.c + 1.0);
  const Scalar tol = 1e-10 * yield_scale;

  if (yield_value(p, sigma_tr, state.alpha) <= tol) {
    res.state = trial;
    res.sigma = sigma_tr;
    res.plastic = false;
  } else if (p.model == YieldModel::VonMises) {
    const Invariants tr_inv = invariants(sigma_tr);
    const Scalar f_tr = tr_inv.q - (std::sqrt(3.0) * p.su + h * state.alpha);
    const Scalar dgamma = solve_consistency(
        [&](Scalar x) { return f_tr - (3.0 * g + h) * x; },
        [&](Scalar) { return -(3.0 * g + h); }, tol);
    const Vec6 s_tr = deviator(sigma_tr);
    const Vec6 n = 1.5 / tr_inv.q * s_tr; // df/dsigma, radial direction
    const Vec6 d_eps_pl = dgamma * n;
    res.state.eps_pl = state.eps_pl + d_eps_pl;
    res.state.eps_el = trial.eps_el - d_eps_pl;
    res.state.alpha = state.alpha + dgamma;
    res.sigma = stress(p, res.state.eps_el);
    res.plastic = true;
  } else {
    const DpConstants dp = dp_params_from_mc(p.c, p.phi);
    const Invariants tr_inv = invariants(sigma_tr);
    const Scalar sj2_tr = std::sqrt(tr_inv.j2);
    const Scalar f_tr = sj2_tr + dp.alpha_dp * tr_inv.i1 - (dp.k_dp + h * state.alpha);
    const Scalar a2 = dp.alpha_dp * dp.alpha_dp;
    const Scalar dgamma_cone = solve_consistency(
        [&](Scalar x) { return f_tr - (g + 9.0 * k * a2 + h) * x; },
        [&](Scalar) { return -(g + 9.0 * k * a2 + h); }, tol);

    Vec6 d_eps_pl;
    Scalar dgamma;
    if (g * dgamma_cone <= sj2_tr) {
      // regular cone return: flow s/(2 sqrt(J2)) + alpha_dp I
      dgamma = dgamma_cone;
      const Vec6 s_tr = deviator(sigma_tr);
      d_eps_pl = dgamma * (0.5 / sj2_tr) * s_tr + dgamma * dp.alpha_dp * identity6();
    } else {
      // apex return: deviatoric stress vanishes, I1 lands on the apex of the
      // hardened cone; the multiplier keeps the cone relation
      // tr(d_eps_pl) = 3 alpha_dp dgamma
      res.apex = true;
      dgamma = (dp.alpha_dp * tr_inv.i1 - dp.k_dp - h * state.alpha) / (9.0 * k * a2 + h);
      const Scalar i1_new = (dp.k_dp + h * (state.alpha + dgamma)) / dp.alpha_dp;
      const Vec6 s_tr = deviator(sigma_tr);
      d_eps_pl = s_tr / (2.0 * g) + (tr_inv.i1 - i1_new) / (9.0 * k) * identity6();
    }
    res.state.eps_pl = state.eps_pl + d_eps_pl;
    res.state.eps_el = trial.eps_el - d_eps_pl;
    res.state.alpha = state.alpha + dgamma;
    res.sigma = stress(p, res.state.eps_el);
    res.plastic = true;
  }

  res.psi = helmholtz(p, res.state);
  const Vec6 sigma_mid = 0.5 * (sigma_old + res.sigma);
  const Vec6 d_eps_pl = res.state.eps_pl - state.eps_pl;
  const Scalar alpha_mid = 0.5 * (state.alpha + res.state.alpha);
  const Scalar d_alpha = res.state.alpha - state.alpha;
  res.d_inc = sigma_mid.dot(d_eps_pl) - h * alpha_mid * d_alpha;
  (void)psi_old;
  return res;
}

} // namespace podtann::plasticity
