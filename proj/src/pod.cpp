#include "podtann/pod.hpp"

#include "podtann/errors.hpp"
#include "podtann/sha256.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace podtann::pod {

int LayoutDescriptor::dofs_per_point() const {
  int n = 0;
  for (const auto& b : blocks)
    n += b.components;
  return n;
}

std::string LayoutDescriptor::canonical_string() const {
  std::ostringstream os;
  os << "layout/v1;points=" << n_points;
  for (const auto& b : blocks)
    os << ";" << b.name << ":" << b.components << ":" << b.unit;
  return os.str();
}

std::string LayoutDescriptor::fingerprint() const { return Sha256::hex(canonical_string()); }

LayoutDescriptor LayoutDescriptor::ruc(int n_points) {
  LayoutDescriptor d;
  d.n_points = n_points;
  d.blocks = {{"eps_el", 6, "-"}, {"eps_pl", 6, "-"}, {"alpha", 1, "-"}};
  return d;
}

LayoutDescriptor LayoutDescriptor::iwan(int n_elements) {
  LayoutDescriptor d;
  d.n_points = n_elements;
  d.blocks = {{"stretch", 1, "m"}, {"slip", 1, "m"}, {"slip_max", 1, "m"}};
  return d;
}

std::string PodBasis::fingerprint() const {
  Sha256 h;
  h.update(u_r.data(), sizeof(Scalar) * u_r.size());
  h.update(singular_values.data(), sizeof(Scalar) * singular_values.size());
  if (row_scale.size() > 0)
    h.update(row_scale.data(), sizeof(Scalar) * row_scale.size());
  return h.hex_digest();
}

namespace {

void normalize_column_signs(MatX& u) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    if (u(imax, j) < 0.0)
      u.col(j) = -u.col(j);
  }
}

// Economy SVD through the smaller Gram matrix. Returns left singular
// vectors (all of them up to min(n, m)) and the full descending spectrum.
void gram_svd(const MatX& s, MatX& u, VecX& sigma) {
  const Eigen::Index n = s.rows();
  const Eigen::Index m = s.cols();
  const Eigen::Index rank_max = std::min(n, m);

  // Gram eigenvalues below the numerical noise floor are exact zeros of
  // the data up to round-off; clamp so zero singular values come out as 0.
  const auto clamp_floor = [](Scalar lambda, Scalar lambda_max) {
    const Scalar floor = 64.0 * std::numeric_limits<Scalar>::epsilon() * lambda_max;
    return lambda > floor ? lambda : 0.0;
  };

  if (n <= m) {
    const MatX gram = s * s.transpose();
    Eigen::SelfAdjointEigenSolver<MatX> eig(gram);
    sigma.resize(rank_max);
    u.resize(n, rank_max);
    const Scalar lambda_max = std::max(eig.eigenvalues()(rank_max - 1), 0.0);
    for (Eigen::Index i = 0; i < rank_max; ++i) {
      const Eigen::Index src = rank_max - 1 - i; // ascending -> descending
      sigma(i) = std::sqrt(clamp_floor(std::max(eig.eigenvalues()(src), 0.0), lambda_max));
      u.col(i) = eig.eigenvectors().col(src);
    }
  } else {
    const MatX gram = s.transpose() * s;
    Eigen::SelfAdjointEigenSolver<MatX> eig(gram);
    sigma.resize(rank_max);
    u.resize(n, rank_max);
    const Scalar lambda_max = std::max(eig.eigenvalues()(rank_max - 1), 0.0);
    for (Eigen::Index i = 0; i < rank_max; ++i) {
      const Eigen::Index src = rank_max - 1 - i;
      sigma(i) = std::sqrt(clamp_floor(std::max(eig.eigenvalues()(src), 0.0), lambda_max));
      if (sigma(i) > 0.0) {
        u.col(i) = s * eig.eigenvectors().col(src) / sigma(i);
      } else {
        // numerically rank deficient: extend with the coordinate direction
        // least covered by the columns built so far
        VecX cover = VecX::Zero(n);
        for (Eigen::Index j = 0; j < i; ++j)
          cover += u.col(j).cwiseAbs2();
        Eigen::Index kmin = 0;
        cover.minCoeff(&kmin);
        VecX v = VecX::Zero(n);
        v(kmin) = 1.0;
        v -= u.leftCols(i) * (u.leftCols(i).transpose() * v);
        u.col(i) = v / v.norm();
      }
    }
    // one re-orthonormalization pass against Gram round-off
    Eigen::HouseholderQR<MatX> qr(u);
    MatX q = qr.householderQ() * MatX::Identity(n, rank_max);
    // keep the original orientation of each column
    for (Eigen::Index j = 0; j < rank_max; ++j)
      if (q.col(j).dot(u.col(j)) < 0.0)
        q.col(j) = -q.col(j);
    u = q;
  }
}

} // namespace

PodBasis compute_pod_basis(const SnapshotMatrix& snapshots, int r) {
  return compute_pod_basis_weighted(snapshots, r, VecX());
}

PodBasis compute_pod_basis_weighted(const SnapshotMatrix& snapshots, int r,
                                    const VecX& row_scale) {
  const Eigen::Index n = snapshots.data.rows();
  const Eigen::Index m = snapshots.data.cols();
  if (r < 1 || r > std::min(n, m))
    throw RankTooLarge("compute_pod_basis: r must lie in [1, min(n_dof, n_snap)]");
  if (row_scale.size() > 0 && row_scale.size() != n)
    throw LayoutMismatch("compute_pod_basis: row_scale length mismatch");

  MatX u;
  VecX sigma;
  if (row_scale.size() > 0) {
    const MatX scaled = row_scale.asDiagonal() * snapshots.data;
    gram_svd(scaled, u, sigma);
  } else {
    gram_svd(snapshots.data, u, sigma);
  }

  PodBasis basis;
  basis.u_r = u.leftCols(r);
  normalize_column_signs(basis.u_r);
  basis.singular_values = sigma;
  basis.r = r;
  basis.layout_fingerprint = snapshots.layout.fingerprint();
  basis.row_scale = row_scale;
  return basis;
}

VecX project(const PodBasis& basis, const VecX& xi) {
  if (xi.size() != basis.u_r.rows())
    throw LayoutMismatch("project: IC length does not match basis rows");
  if (basis.scaled())
    return basis.u_r.transpose() * (basis.row_scale.asDiagonal() * xi);
  return basis.u_r.transpose() * xi;
}

VecX project_rate(const PodBasis& basis, const VecX& dxi) { return project(basis, dxi); }

VecX reconstruct(const PodBasis& basis, const VecX& z) {
  if (z.size() != basis.r)
    throw DimensionMismatch("reconstruct: ISV length does not match r");
  if (basis.scaled())
    return basis.row_scale.cwiseInverse().asDiagonal() * (basis.u_r * z);
  return basis.u_r * z;
}

Scalar compression_ratio(std::int64_t dim_z, std::int64_t dim_xi) {
  if (dim_xi <= 0 || dim_z < 0 || dim_z > dim_xi)
    throw ConfigError("compression_ratio: require 0 <= dim_z <= dim_xi");
  return (1.0 - static_cast<Scalar>(dim_z) / static_cast<Scalar>(dim_xi)) * 100.0;
}

int select_modes_by_singular_threshold(const VecX& singular_values, Scalar threshold) {
  const Eigen::Index n = singular_values.size();
  if (n == 0)
    throw ConfigError("select_modes_by_singular_threshold: empty spectrum");
  const Scalar s0 = singular_values(0);
  if (!(s0 > 0.0))
    return 1;
  for (Eigen::Index r = 1; r < n; ++r)
    if (singular_values(r) / s0 < threshold)
      return static_cast<int>(r);
  return static_cast<int>(n);
}

std::vector<EnergyErrorRow>
energy_reconstruction_error(const SnapshotMatrix& snapshots, const std::vector<int>& r_values,
                            const std::function<Scalar(const VecX&)>& micro_energy_eval,
                            EnergyNorm norm) {
  const Eigen::Index m = snapshots.data.cols();
  VecX psi_exact(m);
  for (Eigen::Index j = 0; j < m; ++j)
    psi_exact(j) = micro_energy_eval(snapshots.data.col(j));

  Scalar psi_norm;
  if (norm == EnergyNorm::Max)
    psi_norm = psi_exact.cwiseAbs().maxCoeff();
  else
    psi_norm = psi_exact.mean();
  if (!(std::abs(psi_norm) > 0.0))
    psi_norm = 1.0;

  const int r_max = *std::max_element(r_values.begin(), r_values.end());
  const PodBasis full = compute_pod_basis(snapshots, r_max);

  std::vector<EnergyErrorRow> rows;
  rows.reserve(r_values.size());
  for (int r : r_values) {
    if (r < 1 || r > full.r)
      throw RankTooLarge("energy_reconstruction_error: r outside computed basis");
    const auto u = full.u_r.leftCols(r);
    Scalar sum = 0.0, sum_sq = 0.0, sum_abs = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const VecX xi = snapshots.data.col(j);
      const VecX xi_rec = u * (u.transpose() * xi);
      const Scalar err = (psi_exact(j) - micro_energy_eval(xi_rec)) / psi_norm;
      sum += err;
      sum_sq += err * err;
      sum_abs += std::abs(err);
    }
    EnergyErrorRow row;
    row.r = r;
    row.mean_err = sum / static_cast<Scalar>(m);
    row.std_err = std::sqrt(std::max(sum_sq / static_cast<Scalar>(m) - row.mean_err * row.mean_err, 0.0));
    row.mean_abs_err = sum_abs / static_cast<Scalar>(m);
    rows.push_back(row);
  }
  return rows;
}

} // namespace podtann::pod
