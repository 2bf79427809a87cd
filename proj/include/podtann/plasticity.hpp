#pragma once

#include "podtann/tensor.hpp"
#include "podtann/types.hpp"

namespace podtann::plasticity {

enum class YieldModel { VonMises, DruckerPrager };

// Pointwise elasto-plastic material with linear isotropic hardening.
// Stresses in kPa, strains dimensionless, angles in degrees.
struct MaterialParams {
  Scalar e_mod = 0.0;       // Young's modulus (kPa)
  Scalar nu = 0.0;          // Poisson ratio
  YieldModel model = YieldModel::VonMises;
  Scalar c = 0.0;           // cohesion (kPa, Drucker-Prager)
  Scalar phi = 0.0;         // friction angle (deg)
  Scalar psi_dil = 0.0;     // dilatancy angle (deg); associative when == phi
  Scalar hardening = 0.0;   // hardening modulus H (kPa)
  Scalar su = 0.0;          // undrained strength (kPa, von Mises)

  bool associative() const { return phi == psi_dil; }
  void validate() const;

  static MaterialParams von_mises(Scalar e_mod, Scalar nu, Scalar su, Scalar h);
  static MaterialParams drucker_prager(Scalar e_mod, Scalar nu, Scalar c, Scalar phi_deg,
                                       Scalar psi_deg, Scalar h);
};

struct PointState {
  Vec6 eps_el = Vec6::Zero();
  Vec6 eps_pl = Vec6::Zero();
  Scalar alpha = 0.0; // equivalent plastic strain, non-decreasing

  VecX flatten() const; // [eps_el, eps_pl, alpha], length 13
};

struct IncrementResult {
  PointState state;
  Vec6 sigma = Vec6::Zero();  // kPa
  Scalar psi = 0.0;           // Helmholtz density (kPa)
  Scalar d_inc = 0.0;         // dissipation over the increment (kPa)
  bool plastic = false;
  bool apex = false;          // Drucker-Prager apex return
};

// Isotropic Hooke operator in the Mandel basis: 3K P_vol + 2G P_dev.
Mat6 elastic_stiffness(const MaterialParams& params);

Scalar bulk_modulus(const MaterialParams& params);
Scalar shear_modulus(const MaterialParams& params);

// Matching of the Mohr-Coulomb compression meridian:
//   alpha_dp = 2 sin(phi) / (sqrt(3) (3 - sin(phi)))
//   k_dp     = 6 c cos(phi) / (sqrt(3) (3 - sin(phi)))
// for the cone f = sqrt(J2) + alpha_dp I1 - k_dp (tension-positive stress).
struct DpConstants {
  Scalar alpha_dp;
  Scalar k_dp;
};
DpConstants dp_params_from_mc(Scalar c, Scalar phi_deg);

// Implicit (radial / cone return) integration of one strain increment.
// Energy bookkeeping:
//   psi   = 1/2 eps_el : C : eps_el + 1/2 H alpha^2
//   d_inc = sigma_mid : d_eps_pl - H alpha_mid d_alpha
// which satisfies sigma_mid : d_eps = d_psi + d_inc to round-off.
IncrementResult integrate_increment(const MaterialParams& params, const PointState& state,
                                    const Vec6& d_eps);

// Helmholtz density for a given state (same expression integrate uses).
Scalar helmholtz(const MaterialParams& params, const PointState& state);

// Stress for a given elastic strain.
Vec6 stress(const MaterialParams& params, const Vec6& eps_el);

// Yield function value f(sigma, alpha); negative inside the elastic domain.
Scalar yield_value(const MaterialParams& params, const Vec6& sigma, Scalar alpha);

} // namespace podtann::plasticity
