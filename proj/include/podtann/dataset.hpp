#pragma once

#include "podtann/errors.hpp"
#include "podtann/types.hpp"

#include <string>
#include <vector>

namespace podtann {

// Dataset-level affine scaling constants. Inputs and conjugate targets are
// scaled by per-component halfwidths into [-1, 1] (zero maps to zero, so
// the pristine state stays at the origin); potential and dissipation by a
// positive scale into [0, 1].
struct Scalers {
  VecX h_in;            // length n_cv + r: conjugate-input comps then ISVs
  VecX h_conj;          // length n_cv: stress (kPa) or displacement targets
  Scalar s_pot = 1.0;   // potential scale (kPa or kN m)
  Scalar s_diss = 1.0;  // dissipation scale

  static Scalers identity(int n_cv, int r);

  int n_cv() const { return static_cast<int>(h_conj.size()); }
  int r() const { return static_cast<int>(h_in.size() - h_conj.size()); }
};

// One increment in scaled units.
struct TrainingSample {
  VecX cv;     // strain E (6) or force F (1)
  VecX z;
  VecX zdot;
  VecX conj;   // target stress (6) or displacement (1)
  Scalar pot = 0.0;
  Scalar diss = 0.0;
};

// Column-per-sample training data in raw units plus the scalers that map
// it to network space. `group` carries the source-path id used for
// leakage-free train/validation splits (rotated copies share the id).
struct Dataset {
  MatX cv;    // n_cv x n
  MatX z;     // r x n
  MatX zdot;  // r x n
  MatX conj;  // n_cv x n
  VecX pot;   // n
  VecX diss;  // n
  std::vector<int> group;   // split unit: source path id
  std::vector<int> record;  // contiguity unit: consecutive samples of one record
  Scalers scalers;
  std::string basis_fingerprint;

  int n_samples() const { return static_cast<int>(pot.size()); }
  int n_cv() const { return static_cast<int>(cv.rows()); }
  int r() const { return static_cast<int>(z.rows()); }

  TrainingSample sample(int i) const;
  void validate() const;
};

// Halfwidth/scale constants from raw data (max-abs per component with a
// small floor against all-zero columns).
Scalers fit_scalers(const Dataset& raw);

} // namespace podtann
