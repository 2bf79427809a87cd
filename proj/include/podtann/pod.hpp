#pragma once

#include "podtann/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace podtann::pod {

// Maps snapshot-matrix rows to (point, field block, component).
// RUC layout: per point [eps_el x6, eps_pl x6, alpha x1].
struct LayoutDescriptor {
  struct Block {
    std::string name;
    int components = 0;
    std::string unit;
  };
  int n_points = 0;
  std::vector<Block> blocks;

  int dofs_per_point() const;
  int n_dof() const { return n_points * dofs_per_point(); }
  std::string canonical_string() const;
  std::string fingerprint() const; // SHA-256 of the canonical string

  static LayoutDescriptor ruc(int n_points);
  static LayoutDescriptor iwan(int n_elements);
};

struct SnapshotMatrix {
  MatX data; // n_dof x n_snap, columns are increments
  LayoutDescriptor layout;

  int n_dof() const { return static_cast<int>(data.rows()); }
  int n_snap() const { return static_cast<int>(data.cols()); }
};

struct PodBasis {
  MatX u_r;                  // n_dof x r, orthonormal columns
  VecX singular_values;      // full spectrum, descending
  int r = 0;
  std::string layout_fingerprint;
  VecX row_scale;            // optional per-row weighting; empty = identity

  int n_dof() const { return static_cast<int>(u_r.rows()); }
  bool scaled() const { return row_scale.size() > 0; }
  std::string fingerprint() const; // SHA-256 over u_r and singular value bytes
};

// Thin SVD of the snapshot matrix, retaining the first r left singular
// vectors. Computed through the eigen-decomposition of the smaller Gram
// matrix (S S^T or S^T S). Column signs are normalized so the
// largest-magnitude entry of each retained mode is positive.
PodBasis compute_pod_basis(const SnapshotMatrix& snapshots, int r);

// As above with per-row weights d: the SVD acts on diag(d) * S, projection
// is U^T diag(d) xi and reconstruction diag(d)^-1 U z.
PodBasis compute_pod_basis_weighted(const SnapshotMatrix& snapshots, int r,
                                    const VecX& row_scale);

VecX project(const PodBasis& basis, const VecX& xi);
VecX project_rate(const PodBasis& basis, const VecX& dxi);
VecX reconstruct(const PodBasis& basis, const VecX& z);

// (1 - dim_z / dim_xi) * 100
Scalar compression_ratio(std::int64_t dim_z, std::int64_t dim_xi);

// Smallest r with sigma_{r+1}/sigma_1 < threshold (full rank if never).
int select_modes_by_singular_threshold(const VecX& singular_values, Scalar threshold);

enum class EnergyNorm { Max, Mean };

struct EnergyErrorRow {
  int r = 0;
  Scalar mean_err = 0.0;
  Scalar std_err = 0.0;
  Scalar mean_abs_err = 0.0;
};

// Normalized macroscopic-energy reconstruction error per retained mode
// count. micro_energy_eval maps a (reconstructed) IC vector to the
// macroscopic energy through the known constitutive model.
std::vector<EnergyErrorRow>
energy_reconstruction_error(const SnapshotMatrix& snapshots, const std::vector<int>& r_values,
                            const std::function<Scalar(const VecX&)>& micro_energy_eval,
                            EnergyNorm norm = EnergyNorm::Max);

} // namespace podtann::pod
