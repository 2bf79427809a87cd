#pragma once

#include "podtann/dataset.hpp"
#include "podtann/pod.hpp"
#include "podtann/tann.hpp"
#include "podtann/types.hpp"

#include <cstdint>
#include <vector>

namespace podtann::macro {

// Parallel spring-slider (Iwan) system with one displacement degree of
// freedom. Element i carries force k_i (u - s_i); the slider yields at
// f_y_i + h_i * kappa_i, where kappa_i tracks the largest slip reached
// (the monotone hardening variable). Forces in kN, displacements in m.
struct IwanSystem {
  VecX stiffness;   // k_i (kN/m)
  VecX slip_force;  // f_y_i (kN)
  VecX hardening;   // h_i (kN/m)
  VecX slip;        // s_i (m), state
  VecX slip_max;    // kappa_i (m), state
  Scalar u = 0.0;   // current displacement (state)

  int n_el() const { return static_cast<int>(stiffness.size()); }
  void validate() const;
  void reset_state();

  Scalar total_force() const;
  Scalar helmholtz() const; // sum 1/2 k (u-s)^2 + 1/2 h kappa^2
  // finite only when every element has zero hardening
  Scalar capacity() const;

  // n_el elements with stiffness and strength spread over a range;
  // deterministic per seed.
  static IwanSystem random(int n_el, std::uint64_t seed, Scalar k_mean = 100.0,
                           Scalar k_spread = 0.5, Scalar fy_mean = 1.0, Scalar fy_spread = 0.5,
                           Scalar h_over_k = 0.0);
};

struct MacroSample {
  Scalar f_h = 0.0;   // horizontal force (kN)
  Scalar u_h = 0.0;   // displacement (m)
  Scalar psi = 0.0;   // system Helmholtz energy (kN m)
  Scalar phi = 0.0;   // Gibbs energy psi - F U (kN m)
  Scalar d_inc = 0.0; // dissipation over the increment (kN m)
};

struct MacroRecord {
  std::vector<MacroSample> samples;
  MatX xi; // 3 n_el x n_inc, blocks [stretch, slip, slip_max]
  pod::LayoutDescriptor layout;
  int group = -1;

  int n_inc() const { return static_cast<int>(samples.size()); }
};

// Force-driven incremental solve (safeguarded Newton on u per increment,
// increments bisected on slow convergence). Updates the system state.
MacroRecord simulate_iwan(IwanSystem& sys, const VecX& force_path);

// Displacement-driven variant (closed-form element returns).
MacroRecord simulate_iwan_displacement(IwanSystem& sys, const VecX& displacement_path);

// Uniform random force path with sign reversals, capped below the system
// capacity when it is finite.
VecX random_force_path(Rng& rng, int n_inc, Scalar max_amplitude);

// Fraction-of-capacity helper for test configs.
Scalar safe_amplitude(const IwanSystem& sys, Scalar fraction);

// Training dataset (F_H as the conjugate input, displacement as target)
// from macro records projected on a basis.
Dataset build_macro_dataset(const std::vector<MacroRecord>& records,
                            const pod::PodBasis& basis);

// Gibbs-potential training: same contract as tann::train with displacement
// replacing stress in the loss and U = -dPhi/dF.
tann::TrainResult train_macro(const Dataset& ds, const tann::TrainConfig& cfg);

inline VecX displacement_from_gibbs(const tann::GibbsModel& m, Scalar f_h, const VecX& z) {
  VecX f(1);
  f(0) = f_h;
  return tann::conjugate_prediction(m, f, z);
}

pod::SnapshotMatrix gather_macro_snapshots(const std::vector<MacroRecord>& records);

} // namespace podtann::macro
