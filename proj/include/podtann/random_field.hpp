#pragma once

#include "podtann/plasticity.hpp"
#include "podtann/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace podtann::field {

// Periodic 3D grid. Cell (ix, iy, iz) stores index (ix*Ny + iy)*Nz + iz.
struct GridSpec {
  Scalar lx = 1.0, ly = 1.0, lz = 1.0;
  int nx = 1, ny = 1, nz = 1;

  Scalar dx() const { return lx / nx; }
  Scalar dy() const { return ly / ny; }
  Scalar dz() const { return lz / nz; }
  std::int64_t cells() const { return std::int64_t(nx) * ny * nz; }
  void validate() const;
  bool operator==(const GridSpec& o) const = default;
};

struct FieldSample {
  VecX values; // cells(), layout as above
  GridSpec grid;
  Scalar kappa = 0.0;
  std::uint64_t seed = 0;

  Scalar mean() const { return values.mean(); }
  Scalar std_dev() const; // population convention (divide by N)
};

// 2*pi * fft frequencies for one axis: [0, 1, ..., ceil(n/2)-1, -floor(n/2), ..., -1] / (n d)
VecX wave_numbers(int n, Scalar d);

// Gaussian-decay power spectral density exp(-k^2 / kappa^2).
Scalar gaussian_psd(Scalar k, Scalar kappa);

// Correlated Gaussian field: real white noise on the grid, transformed to
// Fourier space (Hermitian by construction), modulated by sqrt(S(k)) and
// transformed back. Exactly circulant, so circular shifts of the noise
// produce circular shifts of the field.
FieldSample generate_correlated_field(const GridSpec& grid, Scalar kappa, std::uint64_t seed);

// The same construction for a caller-supplied white-noise field.
FieldSample correlate_noise(const GridSpec& grid, Scalar kappa, const VecX& noise);

// Deterministic per-cell noise draws used by generate_correlated_field.
VecX white_noise(const GridSpec& grid, std::uint64_t seed);

// Affine rescaling (f - mean)/std * target_std + target_mean; the result
// matches the targets exactly in the population convention.
FieldSample scale_field(const FieldSample& f, Scalar target_mean, Scalar target_std);

// Discrete autocovariance of the construction (inverse transform of the
// PSD sampled on the grid), normalized to 1 at zero lag; oracle for the
// empirical estimate.
VecX theoretical_autocovariance(const GridSpec& grid, Scalar kappa);

// Empirical circular autocovariance via the periodogram, same layout.
VecX empirical_autocovariance(const FieldSample& f);

// Radially binned profile of an autocovariance field (bin width = min dx).
struct RadialProfile {
  std::vector<Scalar> lag;
  std::vector<Scalar> value;
};
RadialProfile radial_profile(const VecX& acov, const GridSpec& grid, Scalar r_max);

struct ClipRules {
  Scalar e_min = 1e-6;
  Scalar nu_min = -0.99;
  Scalar nu_max = 0.499;
  Scalar c_min = 0.0;
  Scalar phi_min = 0.0;
  Scalar phi_max = 89.0;
  Scalar h_min = 0.0;
  Scalar su_min = 1e-6;
};

struct AssignResult {
  std::vector<plasticity::MaterialParams> params;
  std::map<std::string, int> clip_counts;
};

// Per-cell material parameters from per-property fields. Recognized keys:
// E, nu, c, phi, psi_dil, H, Su. Missing properties fall back to `base`;
// when phi is sampled and psi_dil is not, flow stays associative.
AssignResult assign_properties(const plasticity::MaterialParams& base,
                               const std::map<std::string, FieldSample>& fields,
                               const ClipRules& rules = {});

} // namespace podtann::field
