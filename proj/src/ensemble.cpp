#include "podtann/ensemble.hpp"

#include <cmath>
#include <string>

namespace podtann::ensemble {

void Ensemble::validate() const {
  if (points.empty())
    throw ConfigError("Ensemble: no points");
  if (weights.size() != static_cast<Eigen::Index>(points.size()))
    throw ConfigError("Ensemble: weight count mismatch");
  if ((weights.array() <= 0.0).any())
    throw ConfigError("Ensemble: weights must be positive");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw ConfigError("Ensemble: weights must sum to 1");
  for (const auto& p : points)
    p.validate();
}

Ensemble Ensemble::uniform(std::vector<plasticity::MaterialParams> params) {
  Ensemble e;
  e.weights = VecX::Constant(params.size(), 1.0 / static_cast<Scalar>(params.size()));
  e.points = std::move(params);
  e.validate();
  return e;
}

Ensemble Ensemble::two_phase(const plasticity::MaterialParams& matrix,
                             const plasticity::MaterialParams& inclusion, int n_points,
                             Scalar inclusion_fraction) {
  if (n_points < 2 || inclusion_fraction <= 0.0 || inclusion_fraction >= 1.0)
    throw ConfigError("Ensemble::two_phase: invalid point count or fraction");
  const int n_inc = std::max(1, static_cast<int>(std::lround(inclusion_fraction * n_points)));
  Ensemble e;
  e.points.assign(n_points - n_inc, matrix);
  e.points.insert(e.points.end(), n_inc, inclusion);
  e.weights = VecX::Constant(n_points, 1.0 / static_cast<Scalar>(n_points));
  e.validate();
  return e;
}

std::vector<Vec6> StrainPath::cumulative() const {
  std::vector<Vec6> cum(increments.size());
  Vec6 acc = Vec6::Zero();
  for (std::size_t t = 0; t < increments.size(); ++t) {
    acc += increments[t];
    cum[t] = acc;
  }
  return cum;
}

StrainPath generate_strain_path(Rng& rng, int n_inc, Scalar std_dev, Scalar init_vol_strain,
                                Scalar j2_cap) {
  if (n_inc < 1)
    throw ConfigError("generate_strain_path: n_inc must be >= 1");
  if (!(std_dev > 0))
    throw ConfigError("generate_strain_path: std_dev must be positive");

  StrainPath path;
  path.increments.reserve(n_inc);

  Vec6 preload = Vec6::Zero();
  preload(0) = preload(1) = preload(2) = init_vol_strain / 3.0;
  Vec6 cum = preload;
  if (invariants(cum).j2 > j2_cap)
    throw CapUnreachable("generate_strain_path: initial state violates the J2 cap");
  path.increments.push_back(preload);

  for (int t = 1; t < n_inc; ++t) {
    Vec6 d;
    bool accepted = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (int k = 0; k < 6; ++k)
        d(k) = rng.normal(0.0, std_dev);
      if (invariants(cum + d).j2 <= j2_cap) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // scale the last draw onto the cap boundary
      const Vec6 dev_c = deviator(cum);
      const Vec6 dev_d = deviator(d);
      const Scalar a = 0.5 * dev_d.squaredNorm();
      const Scalar b = dev_c.dot(dev_d);
      const Scalar c0 = invariants(cum).j2 - j2_cap;
      if (a > 0.0) {
        const Scalar disc = std::max(b * b - 4.0 * a * c0, 0.0);
        const Scalar t_hit = (-b + std::sqrt(disc)) / (2.0 * a);
        d *= std::clamp(t_hit, 0.0, 1.0) * (1.0 - 1e-12);
      }
    }
    cum += d;
    path.increments.push_back(d);
  }
  return path;
}

PathRecord simulate_path(const Ensemble& ens, const StrainPath& path) {
  ens.validate();
  const int n = path.n_inc();
  const int np = ens.n_points();

  PathRecord rec;
  rec.layout = pod::LayoutDescriptor::ruc(np);
  rec.strain.assign(n, Vec6::Zero());
  rec.stress.assign(n, Vec6::Zero());
  rec.psi = VecX::Zero(n);
  rec.d_inc = VecX::Zero(n);
  rec.xi = MatX::Zero(13 * np, n);

  Vec6 acc = Vec6::Zero();
  for (int t = 0; t < n; ++t) {
    acc += path.increments[t];
    rec.strain[t] = acc;
  }

  for (int i = 0; i < np; ++i) {
    plasticity::PointState state;
    const Scalar w = ens.weights(i);
    for (int t = 0; t < n; ++t) {
      plasticity::IncrementResult out;
      try {
        out = plasticity::integrate_increment(ens.points[i], state, path.increments[t]);
      } catch (const SimulationError& err) {
        throw NonConvergence("simulate_path: point " + std::to_string(i) + ", increment " +
                             std::to_string(t) + ": " + err.what());
      }
      state = out.state;
      rec.stress[t] += w * out.sigma;
      rec.psi(t) += w * out.psi;
      rec.d_inc(t) += w * out.d_inc;
      rec.xi.block<6, 1>(13 * i, t) = state.eps_el;
      rec.xi.block<6, 1>(13 * i + 6, t) = state.eps_pl;
      rec.xi(13 * i + 12, t) = state.alpha;
    }
  }
  return rec;
}

PathRecord augment_rotation(const PathRecord& rec, const Mat3& r) {
  check_rotation(r);
  if (r.isIdentity(0.0))
    return rec;
  PathRecord out = rec;
  const int n = rec.n_inc();
  for (int t = 0; t < n; ++t) {
    out.strain[t] = rotate(rec.strain[t], r);
    out.stress[t] = rotate(rec.stress[t], r);
  }
  // rotate six-component blocks of the microscale state, copy the rest
  int row = 0;
  std::vector<std::pair<int, bool>> spans; // (components, is_tensor)
  for (const auto& b : rec.layout.blocks)
    spans.emplace_back(b.components, b.components == 6);
  for (int i = 0; i < rec.layout.n_points; ++i) {
    for (const auto& [comps, is_tensor] : spans) {
      if (is_tensor) {
        for (int t = 0; t < n; ++t) {
          const Vec6 v = rec.xi.block<6, 1>(row, t);
          out.xi.block<6, 1>(row, t) = rotate(v, r);
        }
      }
      row += comps;
    }
  }
  return out;
}

pod::SnapshotMatrix gather_snapshots(const std::vector<PathRecord>& records) {
  if (records.empty())
    throw ConfigError("gather_snapshots: no records");
  const auto layout = records.front().layout;
  int total = 0;
  for (const auto& rec : records) {
    if (rec.layout.fingerprint() != layout.fingerprint())
      throw LayoutMismatch("gather_snapshots: records use different layouts");
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

Dataset build_dataset(const std::vector<PathRecord>& records, const pod::PodBasis& basis) {
  if (records.empty())
    throw ConfigError("build_dataset: no records");
  int total = 0;
  for (const auto& rec : records) {
    if (rec.xi.rows() != basis.u_r.rows())
      throw LayoutMismatch("build_dataset: basis row count does not match IC length");
    if (rec.layout.fingerprint() != basis.layout_fingerprint)
      throw LayoutMismatch("build_dataset: basis was built for a different layout");
    total += rec.n_inc();
  }

  Dataset ds;
  const int r = basis.r;
  ds.cv.resize(6, total);
  ds.z.resize(r, total);
  ds.zdot.resize(r, total);
  ds.conj.resize(6, total);
  ds.pot.resize(total);
  ds.diss.resize(total);
  ds.group.resize(total);
  ds.record.resize(total);
  ds.basis_fingerprint = basis.fingerprint();

  int col = 0;
  int fallback_group = 0;
  int record_id = 0;
  for (const auto& rec : records) {
    const int n = rec.n_inc();
    VecX prev = VecX::Zero(rec.xi.rows());
    const int group = rec.group >= 0 ? rec.group : fallback_group;
    for (int t = 0; t < n; ++t, ++col) {
      ds.cv.col(col) = rec.strain[t];
      ds.conj.col(col) = rec.stress[t];
      ds.pot(col) = rec.psi(t);
      ds.diss(col) = rec.d_inc(t);
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

std::function<Scalar(const VecX&)> micro_energy_evaluator(const Ensemble& ens) {
  ens.validate();
  return [ens](const VecX& xi) {
    const int np = ens.n_points();
    if (xi.size() != 13 * np)
      throw LayoutMismatch("micro_energy_evaluator: IC length mismatch");
    Scalar psi = 0.0;
    for (int i = 0; i < np; ++i) {
      plasticity::PointState st;
      st.eps_el = xi.segment<6>(13 * i);
      st.eps_pl = xi.segment<6>(13 * i + 6);
      st.alpha = xi(13 * i + 12);
      psi += ens.weights(i) * plasticity::helmholtz(ens.points[i], st);
    }
    return psi;
  };
}

} // namespace podtann::ensemble
