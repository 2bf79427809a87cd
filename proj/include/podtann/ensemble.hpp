#pragma once

#include "podtann/dataset.hpp"
#include "podtann/plasticity.hpp"
#include "podtann/pod.hpp"
#include "podtann/tensor.hpp"

#include <functional>
#include <vector>

namespace podtann::ensemble {

// Heterogeneous Gauss-point ensemble under uniform macroscopic strain
// (Taylor coupling). Volume fractions are the averaging weights.
struct Ensemble {
  std::vector<plasticity::MaterialParams> points;
  VecX weights;

  int n_points() const { return static_cast<int>(points.size()); }
  void validate() const;

  static Ensemble uniform(std::vector<plasticity::MaterialParams> params);
  static Ensemble two_phase(const plasticity::MaterialParams& matrix,
                            const plasticity::MaterialParams& inclusion, int n_points,
                            Scalar inclusion_fraction);
};

struct StrainPath {
  std::vector<Vec6> increments;

  int n_inc() const { return static_cast<int>(increments.size()); }
  std::vector<Vec6> cumulative() const;
};

// Random strain path: a volumetric preload increment followed by
// component-wise Gaussian draws in Mandel components; draws that would push
// the cumulative second deviatoric invariant past the cap are resampled up
// to 100 times, then scaled onto the cap boundary.
StrainPath generate_strain_path(Rng& rng, int n_inc, Scalar std_dev = 5e-4,
                                Scalar init_vol_strain = -5e-4, Scalar j2_cap = 0.015);

// Per-increment macroscopic record plus the flattened microscale state.
struct PathRecord {
  std::vector<Vec6> strain;  // cumulative macroscopic strain E
  std::vector<Vec6> stress;  // volume-averaged Sigma (kPa)
  VecX psi;                  // volume-averaged Helmholtz density (kPa)
  VecX d_inc;                // volume-averaged dissipation per increment (kPa)
  MatX xi;                   // n_dof x n_inc, columns [eps_el, eps_pl, alpha] per point
  pod::LayoutDescriptor layout;
  int group = -1;            // source-path id (shared by rotated copies)

  int n_inc() const { return static_cast<int>(strain.size()); }
};

PathRecord simulate_path(const Ensemble& ens, const StrainPath& path);

// Rotates every tensor entry (macroscopic and microscale blocks with six
// components); scalars are copied unchanged.
PathRecord augment_rotation(const PathRecord& rec, const Mat3& r);

// Projects the microscale states of all records onto the basis and emits
// the training dataset with fitted scalers. Rates use unit pseudo-time and
// a zero pristine state before the first increment.
Dataset build_dataset(const std::vector<PathRecord>& records, const pod::PodBasis& basis);

// Macroscopic energy of a (possibly reconstructed) IC vector through the
// ensemble's constitutive model; the upscaling operator for the energy
// reconstruction error.
std::function<Scalar(const VecX&)> micro_energy_evaluator(const Ensemble& ens);

// Snapshot matrix gathering the xi columns of all records.
pod::SnapshotMatrix gather_snapshots(const std::vector<PathRecord>& records);

} // namespace podtann::ensemble
