#include "podtann/random_field.hpp"

#include "podtann/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace podtann::field {

namespace {

using Cplx = std::complex<Scalar>;
using CVecX = Eigen::Matrix<Cplx, Eigen::Dynamic, 1>;

// In-place 3D FFT, one axis at a time.
void fft3(CVecX& data, const GridSpec& g, bool inverse) {
  Eigen::FFT<Scalar> fft;
  const int nx = g.nx, ny = g.ny, nz = g.nz;
  auto idx = [&](int ix, int iy, int iz) { return (std::int64_t(ix) * ny + iy) * nz + iz; };

  std::vector<Cplx> line, out;
  // z axis (contiguous)
  line.resize(nz);
  out.resize(nz);
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy) {
      for (int iz = 0; iz < nz; ++iz)
        line[iz] = data(idx(ix, iy, iz));
      if (inverse)
        fft.inv(out, line);
      else
        fft.fwd(out, line);
      for (int iz = 0; iz < nz; ++iz)
        data(idx(ix, iy, iz)) = out[iz];
    }
  // y axis
  line.resize(ny);
  out.resize(ny);
  for (int ix = 0; ix < nx; ++ix)
    for (int iz = 0; iz < nz; ++iz) {
      for (int iy = 0; iy < ny; ++iy)
        line[iy] = data(idx(ix, iy, iz));
      if (inverse)
        fft.inv(out, line);
      else
        fft.fwd(out, line);
      for (int iy = 0; iy < ny; ++iy)
        data(idx(ix, iy, iz)) = out[iy];
    }
  // x axis
  line.resize(nx);
  out.resize(nx);
  for (int iy = 0; iy < ny; ++iy)
    for (int iz = 0; iz < nz; ++iz) {
      for (int ix = 0; ix < nx; ++ix)
        line[ix] = data(idx(ix, iy, iz));
      if (inverse)
        fft.inv(out, line);
      else
        fft.fwd(out, line);
      for (int ix = 0; ix < nx; ++ix)
        data(idx(ix, iy, iz)) = out[ix];
    }
}

} // namespace

void GridSpec::validate() const {
  if (!(lx > 0 && ly > 0 && lz > 0))
    throw ConfigError("GridSpec: lengths must be positive");
  if (nx < 1 || ny < 1 || nz < 1)
    throw ConfigError("GridSpec: resolutions must be positive");
}

Scalar FieldSample::std_dev() const {
  const Scalar mu = values.mean();
  return std::sqrt((values.array() - mu).square().mean());
}

VecX wave_numbers(int n, Scalar d) {
  VecX k(n);
  for (int i = 0; i < n; ++i) {
    const int f = i < (n + 1) / 2 ? i : i - n;
    k(i) = 2.0 * M_PI * static_cast<Scalar>(f) / (n * d);
  }
  return k;
}

Scalar gaussian_psd(Scalar k, Scalar kappa) { return std::exp(-(k * k) / (kappa * kappa)); }

VecX white_noise(const GridSpec& grid, std::uint64_t seed) {
  grid.validate();
  const std::int64_t n = grid.cells();
  Rng rng(seed);
  VecX w(n);
  for (std::int64_t i = 0; i < n; ++i)
    w(i) = rng.normal();
  return w;
}

FieldSample generate_correlated_field(const GridSpec& grid, Scalar kappa, std::uint64_t seed) {
  FieldSample f = correlate_noise(grid, kappa, white_noise(grid, seed));
  f.seed = seed;
  return f;
}

FieldSample correlate_noise(const GridSpec& grid, Scalar kappa, const VecX& noise) {
  grid.validate();
  if (!(kappa > 0))
    throw ConfigError("correlate_noise: kappa must be positive");
  const std::int64_t n = grid.cells();
  if (noise.size() != n)
    throw GridMismatch("correlate_noise: noise length does not match the grid");

  CVecX spec(n);
  for (std::int64_t i = 0; i < n; ++i)
    spec(i) = Cplx(noise(i), 0.0);

  fft3(spec, grid, false);

  const VecX kx = wave_numbers(grid.nx, grid.dx());
  const VecX ky = wave_numbers(grid.ny, grid.dy());
  const VecX kz = wave_numbers(grid.nz, grid.dz());
  std::int64_t i = 0;
  for (int ix = 0; ix < grid.nx; ++ix)
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int iz = 0; iz < grid.nz; ++iz, ++i) {
        const Scalar k = std::sqrt(kx(ix) * kx(ix) + ky(iy) * ky(iy) + kz(iz) * kz(iz));
        spec(i) *= std::sqrt(gaussian_psd(k, kappa));
      }

  fft3(spec, grid, true);

  const Scalar norm = spec.norm();
  const Scalar imag_norm = spec.imag().norm();
  if (norm > 0 && imag_norm > 1e-10 * norm)
    throw SimulationError("correlate_noise: imaginary residue above tolerance");

  FieldSample f;
  f.values = spec.real();
  f.grid = grid;
  f.kappa = kappa;
  f.seed = 0;
  return f;
}

FieldSample scale_field(const FieldSample& f, Scalar target_mean, Scalar target_std) {
  const Scalar mu = f.mean();
  const Scalar sd = f.std_dev();
  if (!(sd > 0))
    throw DegenerateField("scale_field: field has zero standard deviation");
  if (target_std < 0)
    throw ConfigError("scale_field: target std must be non-negative");
  FieldSample out = f;
  out.values = (f.values.array() - mu) / sd * target_std + target_mean;
  return out;
}

VecX theoretical_autocovariance(const GridSpec& grid, Scalar kappa) {
  const std::int64_t n = grid.cells();
  CVecX spec(n);
  const VecX kx = wave_numbers(grid.nx, grid.dx());
  const VecX ky = wave_numbers(grid.ny, grid.dy());
  const VecX kz = wave_numbers(grid.nz, grid.dz());
  std::int64_t i = 0;
  for (int ix = 0; ix < grid.nx; ++ix)
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int iz = 0; iz < grid.nz; ++iz, ++i) {
        const Scalar k = std::sqrt(kx(ix) * kx(ix) + ky(iy) * ky(iy) + kz(iz) * kz(iz));
        spec(i) = Cplx(gaussian_psd(k, kappa), 0.0);
      }
  fft3(spec, grid, true);
  VecX acov = spec.real();
  const Scalar a0 = acov(0);
  if (a0 > 0)
    acov /= a0;
  return acov;
}

VecX empirical_autocovariance(const FieldSample& f) {
  const std::int64_t n = f.grid.cells();
  CVecX spec(n);
  for (std::int64_t i = 0; i < n; ++i)
    spec(i) = Cplx(f.values(i), 0.0);
  fft3(spec, f.grid, false);
  for (std::int64_t i = 0; i < n; ++i)
    spec(i) = Cplx(std::norm(spec(i)), 0.0);
  fft3(spec, f.grid, true);
  return spec.real() / static_cast<Scalar>(n);
}

RadialProfile radial_profile(const VecX& acov, const GridSpec& grid, Scalar r_max) {
  const Scalar bin = std::min({grid.dx(), grid.dy(), grid.dz()});
  const int n_bins = static_cast<int>(r_max / bin) + 1;
  std::vector<Scalar> sum(n_bins, 0.0);
  std::vector<std::int64_t> count(n_bins, 0);

  std::int64_t i = 0;
  for (int ix = 0; ix < grid.nx; ++ix)
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int iz = 0; iz < grid.nz; ++iz, ++i) {
        // periodic lag distance
        const int jx = std::min(ix, grid.nx - ix);
        const int jy = std::min(iy, grid.ny - iy);
        const int jz = std::min(iz, grid.nz - iz);
        const Scalar r = std::sqrt(jx * grid.dx() * jx * grid.dx() +
                                   jy * grid.dy() * jy * grid.dy() +
                                   jz * grid.dz() * jz * grid.dz());
        if (r > r_max)
          continue;
        const int b = static_cast<int>(r / bin);
        sum[b] += acov(i);
        count[b] += 1;
      }

  RadialProfile prof;
  for (int b = 0; b < n_bins; ++b) {
    if (count[b] == 0)
      continue;
    prof.lag.push_back((b + 0.5) * bin);
    prof.value.push_back(sum[b] / count[b]);
  }
  return prof;
}

AssignResult assign_properties(const plasticity::MaterialParams& base,
                               const std::map<std::string, FieldSample>& fields,
                               const ClipRules& rules) {
  if (fields.empty())
    throw ConfigError("assign_properties: no fields given");
  const GridSpec grid = fields.begin()->second.grid;
  for (const auto& [name, f] : fields)
    if (!(f.grid == grid))
      throw GridMismatch("assign_properties: field '" + name + "' uses a different grid");

  static const std::vector<std::string> known = {"E", "nu", "c", "phi", "psi_dil", "H", "Su"};
  for (const auto& [name, f] : fields) {
    (void)f;
    bool ok = false;
    for (const auto& k : known)
      ok = ok || k == name;
    if (!ok)
      throw ConfigError("assign_properties: unknown property '" + name + "'");
  }

  const std::int64_t n = grid.cells();
  AssignResult res;
  res.params.reserve(n);

  auto clip = [&res](const std::string& name, Scalar v, Scalar lo, Scalar hi) {
    if (v < lo) {
      res.clip_counts[name] += 1;
      return lo;
    }
    if (v > hi) {
      res.clip_counts[name] += 1;
      return hi;
    }
    return v;
  };

  const bool phi_sampled = fields.count("phi") > 0;
  const bool psi_sampled = fields.count("psi_dil") > 0;
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();

  for (std::int64_t i = 0; i < n; ++i) {
    plasticity::MaterialParams p = base;
    if (auto it = fields.find("E"); it != fields.end())
      p.e_mod = clip("E", it->second.values(i), rules.e_min, inf);
    if (auto it = fields.find("nu"); it != fields.end())
      p.nu = clip("nu", it->second.values(i), rules.nu_min, rules.nu_max);
    if (auto it = fields.find("c"); it != fields.end())
      p.c = clip("c", it->second.values(i), rules.c_min, inf);
    if (auto it = fields.find("phi"); it != fields.end())
      p.phi = clip("phi", it->second.values(i), rules.phi_min, rules.phi_max);
    if (auto it = fields.find("psi_dil"); it != fields.end())
      p.psi_dil = clip("psi_dil", it->second.values(i), rules.phi_min, rules.phi_max);
    if (auto it = fields.find("H"); it != fields.end())
      p.hardening = clip("H", it->second.values(i), rules.h_min, inf);
    if (auto it = fields.find("Su"); it != fields.end())
      p.su = clip("Su", it->second.values(i), rules.su_min, inf);
    if (phi_sampled && !psi_sampled)
      p.psi_dil = p.phi;
    p.validate();
    res.params.push_back(p);
  }
  return res;
}

} // namespace podtann::field
