#include "podtann/tann.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace podtann::tann {

QuadLayerNet init_network(int n_in, int hidden, std::uint64_t seed) {
  if (n_in < 1 || hidden < 1)
    throw ConfigError("init_network: n_in and hidden must be >= 1");
  Rng rng(seed);
  QuadLayerNet net;
  net.w1.resize(hidden, n_in);
  const Scalar lim1 = std::sqrt(6.0 / static_cast<Scalar>(n_in + hidden));
  for (int i = 0; i < hidden; ++i)
    for (int k = 0; k < n_in; ++k)
      net.w1(i, k) = rng.uniform(-lim1, lim1);
  net.b1 = VecX::Zero(hidden);
  net.w2.resize(hidden);
  const Scalar lim2 = std::sqrt(6.0 / static_cast<Scalar>(hidden + 1));
  for (int i = 0; i < hidden; ++i)
    net.w2(i) = rng.uniform(-lim2, lim2);
  return net;
}

namespace {

Scalar net_raw_value(const QuadLayerNet& net, const VecX& x) {
  return net.w2.dot((net.w1 * x + net.b1).cwiseAbs2());
}

// anchor: net value at the scaled origin
Scalar net_anchor(const QuadLayerNet& net) { return net.w2.dot(net.b1.cwiseAbs2()); }

} // namespace

Scalar net_value(const QuadLayerNet& net, const VecX& x) {
  if (x.size() != net.n_in())
    throw DimensionMismatch("net_value: input size mismatch");
  return net_raw_value(net, x) - net_anchor(net);
}

VecX net_input_gradient(const QuadLayerNet& net, const VecX& x) {
  if (x.size() != net.n_in())
    throw DimensionMismatch("net_input_gradient: input size mismatch");
  const VecX a = net.w1 * x + net.b1;
  return 2.0 * net.w1.transpose() * net.w2.cwiseProduct(a);
}

void EnergyModel::validate() const {
  if (net.n_in() != n_cv + r)
    throw DimensionMismatch("EnergyModel: network input size != n_cv + r");
  if (scalers.h_in.size() != n_cv + r || scalers.h_conj.size() != n_cv)
    throw DimensionMismatch("EnergyModel: scaler sizes inconsistent");
  if (conj_sign != 1.0 && conj_sign != -1.0)
    throw ConfigError("EnergyModel: conj_sign must be +-1");
}

EnergyModel make_energy_model(int n_cv, int r, int hidden, std::uint64_t seed,
                              const Scalers& scalers, Scalar conj_sign,
                              std::string basis_fingerprint) {
  EnergyModel m;
  m.net = init_network(n_cv + r, hidden, seed);
  m.scalers = scalers;
  m.n_cv = n_cv;
  m.r = r;
  m.conj_sign = conj_sign;
  m.basis_fingerprint = std::move(basis_fingerprint);
  m.validate();
  return m;
}

namespace {

VecX scale_inputs(const EnergyModel& m, const VecX& cv, const VecX& z) {
  if (cv.size() != m.n_cv || z.size() != m.r)
    throw DimensionMismatch("EnergyModel: input dimensions do not match the model");
  VecX x(m.n_in());
  x.head(m.n_cv) = cv.cwiseQuotient(m.scalers.h_in.head(m.n_cv));
  x.tail(m.r) = z.cwiseQuotient(m.scalers.h_in.tail(m.r));
  return x;
}

} // namespace

Scalar forward_energy(const EnergyModel& m, const VecX& cv, const VecX& z) {
  return m.scalers.s_pot * net_value(m.net, scale_inputs(m, cv, z));
}

VecX conjugate_prediction(const EnergyModel& m, const VecX& cv, const VecX& z) {
  const VecX g = net_input_gradient(m.net, scale_inputs(m, cv, z));
  return m.conj_sign * m.scalers.s_pot *
         g.head(m.n_cv).cwiseQuotient(m.scalers.h_in.head(m.n_cv));
}

Scalar dissipation_pred(const EnergyModel& m, const VecX& cv, const VecX& z, const VecX& zdot) {
  if (zdot.size() != m.r)
    throw DimensionMismatch("dissipation_pred: zdot dimension mismatch");
  const VecX g = net_input_gradient(m.net, scale_inputs(m, cv, z));
  const VecX dpsi_dz =
      m.scalers.s_pot * g.tail(m.r).cwiseQuotient(m.scalers.h_in.tail(m.r));
  return -dpsi_dz.dot(zdot);
}

EnergyModel add_z_offset(const EnergyModel& m, const MatX& q2, const VecX& q1) {
  if (q2.rows() != m.r || q2.cols() != m.r || q1.size() != m.r)
    throw DimensionMismatch("add_z_offset: quadratic form must match the mode count");
  if ((q2 - q2.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q2.cwiseAbs().maxCoeff()))
    throw ConfigError("add_z_offset: q2 must be symmetric");

  // g(Z) embeds exactly: each eigenpair of q2 becomes one hidden unit with
  // weights on the Z inputs only, the linear part a difference of two
  // shifted squares. Strain weights are zero, so conjugate predictions
  // cannot change.
  Eigen::SelfAdjointEigenSolver<MatX> eig(q2);
  const VecX hz = m.scalers.h_in.tail(m.r);

  std::vector<VecX> rows;
  std::vector<Scalar> b_new, w2_new;
  for (int i = 0; i < m.r; ++i) {
    const Scalar lambda = eig.eigenvalues()(i);
    if (lambda == 0.0)
      continue;
    VecX row = VecX::Zero(m.n_in());
    row.tail(m.r) = eig.eigenvectors().col(i).cwiseProduct(hz);
    rows.push_back(row);
    b_new.push_back(0.0);
    w2_new.push_back(0.5 * lambda / m.scalers.s_pot);
  }
  if (q1.cwiseAbs().maxCoeff() > 0.0) {
    VecX row = VecX::Zero(m.n_in());
    row.tail(m.r) = q1.cwiseProduct(hz);
    rows.push_back(row);
    b_new.push_back(1.0);
    w2_new.push_back(0.25 / m.scalers.s_pot);
    rows.push_back(row);
    b_new.push_back(-1.0);
    w2_new.push_back(-0.25 / m.scalers.s_pot);
  }

  EnergyModel out = m;
  const int h0 = m.net.hidden();
  const int extra = static_cast<int>(rows.size());
  out.net.w1.conservativeResize(h0 + extra, Eigen::NoChange);
  out.net.b1.conservativeResize(h0 + extra);
  out.net.w2.conservativeResize(h0 + extra);
  for (int i = 0; i < extra; ++i) {
    out.net.w1.row(h0 + i) = rows[i].transpose();
    out.net.b1(h0 + i) = b_new[i];
    out.net.w2(h0 + i) = w2_new[i];
  }
  return out;
}

void TrainConfig::validate() const {
  const bool full = variant == LossVariant::Full;
  const Scalar active = w_conj + w_reg + (full ? w_pot + w_diss : 0.0);
  if (w_pot < 0 || w_conj < 0 || w_diss < 0 || w_reg < 0)
    throw ConfigError("TrainConfig: loss weights must be non-negative");
  if (!(active > 0))
    throw ConfigError("TrainConfig: at least one loss weight must be positive");
  if (batch < 1 || epochs < 0 || hidden < 1 || tail_average < 0)
    throw ConfigError("TrainConfig: batch/epochs/hidden out of range");
  if (!(learning_rate > 0))
    throw ConfigError("TrainConfig: learning rate must be positive");
  if (val_fraction < 0 || val_fraction >= 1)
    throw ConfigError("TrainConfig: val_fraction must lie in [0, 1)");
}

void Gradients::set_zero(int hidden, int n_in) {
  w1 = MatX::Zero(hidden, n_in);
  b1 = VecX::Zero(hidden);
  w2 = VecX::Zero(hidden);
}

Batch make_batch(const Dataset& ds, const std::vector<int>& idx) {
  const int b = static_cast<int>(idx.size());
  const int ncv = ds.n_cv();
  const int r = ds.r();
  Batch batch;
  batch.x.resize(ncv + r, b);
  batch.conj_t.resize(ncv, b);
  batch.pot_t.resize(b);
  batch.diss_t.resize(b);
  batch.zdot_scaled.resize(r, b);
  const VecX inv_hin = ds.scalers.h_in.cwiseInverse();
  const VecX inv_hconj = ds.scalers.h_conj.cwiseInverse();
  const VecX inv_hz = inv_hin.tail(r);
  for (int j = 0; j < b; ++j) {
    const int i = idx[j];
    batch.x.col(j).head(ncv) = ds.cv.col(i).cwiseProduct(inv_hin.head(ncv));
    batch.x.col(j).tail(r) = ds.z.col(i).cwiseProduct(inv_hz);
    batch.conj_t.col(j) = ds.conj.col(i).cwiseProduct(inv_hconj);
    batch.pot_t(j) = ds.pot(i) / ds.scalers.s_pot;
    batch.diss_t(j) = ds.diss(i) / ds.scalers.s_diss;
    batch.zdot_scaled.col(j) = ds.zdot.col(i).cwiseProduct(inv_hz);
  }
  return batch;
}

LossBreakdown loss(const EnergyModel& m, const Batch& batch, const TrainConfig& cfg,
                   Gradients* grads) {
  cfg.validate();
  m.validate();
  const int b = batch.size();
  if (b == 0)
    throw ConfigError("loss: empty batch");
  const int n = m.n_in();
  const int ncv = m.n_cv;
  const int r = m.r;
  const bool full = cfg.variant == LossVariant::Full;
  const Scalar w_pot = full ? cfg.w_pot : 0.0;
  const Scalar w_diss = full ? cfg.w_diss : 0.0;

  const MatX a = (m.net.w1 * batch.x).colwise() + m.net.b1;        // h x B
  const MatX wa = m.net.w2.asDiagonal() * a;                       // h x B
  const Scalar anchor = net_anchor(m.net);
  const Eigen::RowVectorXd pot_pred =
      ((m.net.w2.transpose() * a.cwiseAbs2()).array() - anchor).matrix(); // 1 x B
  const MatX g = 2.0 * m.net.w1.transpose() * wa;                  // n x B

  // scaled conjugate prediction: sign * s_pot/(h_in h_conj) per component
  const VecX u = m.conj_sign * m.scalers.s_pot *
                 m.scalers.h_in.head(ncv).cwiseProduct(m.scalers.h_conj).cwiseInverse();
  const MatX conj_pred = u.asDiagonal() * g.topRows(ncv);          // ncv x B

  // scaled dissipation prediction
  const Scalar dscale = m.scalers.s_pot / m.scalers.s_diss;
  const Eigen::RowVectorXd diss_pred =
      -dscale * (g.bottomRows(r).cwiseProduct(batch.zdot_scaled)).colwise().sum();

  const Scalar inv_b = 1.0 / static_cast<Scalar>(b);
  LossBreakdown out;
  const Eigen::RowVectorXd pot_res = pot_pred - batch.pot_t.transpose();
  out.pot = pot_res.squaredNorm() * inv_b;
  const MatX conj_res = conj_pred - batch.conj_t;
  out.conj = conj_res.squaredNorm() * inv_b / static_cast<Scalar>(ncv);
  const Eigen::RowVectorXd diss_res = diss_pred - batch.diss_t.transpose();
  out.diss = diss_res.squaredNorm() * inv_b;
  const Eigen::RowVectorXd relu_neg = (-diss_pred).cwiseMax(0.0);
  out.reg = relu_neg.squaredNorm() * inv_b;
  out.total = w_pot * out.pot + cfg.w_conj * out.conj + w_diss * out.diss + cfg.w_reg * out.reg;

  if (grads == nullptr)
    return out;

  // dL/d(pot_pred), dL/d(G)
  Eigen::RowVectorXd r_pot = (2.0 * w_pot * inv_b) * pot_res;
  Eigen::RowVectorXd r_diss = (2.0 * w_diss * inv_b) * diss_res - (2.0 * cfg.w_reg * inv_b) * relu_neg;
  MatX p(n, b);
  p.topRows(ncv) =
      u.asDiagonal() * ((2.0 * cfg.w_conj * inv_b / static_cast<Scalar>(ncv)) * conj_res);
  p.bottomRows(r) = batch.zdot_scaled * (-dscale) * r_diss.asDiagonal();

  const MatX w1p = m.net.w1 * p; // h x B

  grads->w2 = a.cwiseAbs2() * r_pot.transpose() + 2.0 * (a.cwiseProduct(w1p)).rowwise().sum();
  grads->w2 -= r_pot.sum() * m.net.b1.cwiseAbs2(); // anchor term (a0 = b1)

  grads->b1 = 2.0 * m.net.w2.cwiseProduct(a * r_pot.transpose()) +
              2.0 * m.net.w2.cwiseProduct(w1p.rowwise().sum());
  grads->b1 -= 2.0 * r_pot.sum() * m.net.w2.cwiseProduct(m.net.b1); // anchor term

  grads->w1 = 2.0 * m.net.w2.asDiagonal() *
              ((a * r_pot.asDiagonal()) * batch.x.transpose() + w1p * batch.x.transpose() +
               a * p.transpose());
  return out;
}

void NadamState::init(int hidden, int n_in) {
  mom1.set_zero(hidden, n_in);
  mom2.set_zero(hidden, n_in);
  t = 0;
}

void nadam_step(QuadLayerNet& net, const Gradients& grads, NadamState& state, Scalar lr) {
  state.t += 1;
  nadam_update(grads.w1, state.mom1.w1, state.mom2.w1, net.w1, state.t, lr, state.constants);
  nadam_update(grads.b1, state.mom1.b1, state.mom2.b1, net.b1, state.t, lr, state.constants);
  nadam_update(grads.w2, state.mom1.w2, state.mom2.w2, net.w2, state.t, lr, state.constants);
}

namespace {

void check_finite(const LossBreakdown& l) {
  if (!std::isfinite(l.total))
    throw Diverged("train: loss became non-finite");
}

// Deterministic Fisher-Yates over indices.
template <typename T>
void shuffle_indices(std::vector<T>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<Scalar>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
}

struct Split {
  std::vector<int> train_idx;
  std::vector<int> val_idx;
  std::vector<int> val_groups;
};

Split split_by_group(const Dataset& ds, Scalar val_fraction, Rng& rng) {
  std::vector<int> groups;
  for (int g : ds.group)
    if (std::find(groups.begin(), groups.end(), g) == groups.end())
      groups.push_back(g);
  std::sort(groups.begin(), groups.end());

  Split split;
  if (groups.size() > 1 && val_fraction > 0.0) {
    std::vector<int> order = groups;
    shuffle_indices(order, rng);
    const int n_val = std::max(1, static_cast<int>(std::lround(val_fraction * groups.size())));
    split.val_groups.assign(order.begin(), order.begin() + n_val);
    std::sort(split.val_groups.begin(), split.val_groups.end());
  }
  for (int i = 0; i < ds.n_samples(); ++i) {
    const bool in_val = std::find(split.val_groups.begin(), split.val_groups.end(),
                                  ds.group[i]) != split.val_groups.end();
    (in_val ? split.val_idx : split.train_idx).push_back(i);
  }
  return split;
}

} // namespace

TrainResult train(const Dataset& ds, const TrainConfig& cfg, Scalar conj_sign,
                  std::string basis_fingerprint) {
  cfg.validate();
  ds.validate();

  Rng rng(cfg.seed);
  const Split split = split_by_group(ds, cfg.val_fraction, rng);
  if (split.train_idx.empty())
    throw ConfigError("train: empty training split");

  TrainResult res;
  res.model = make_energy_model(ds.n_cv(), ds.r(), cfg.hidden, cfg.seed, ds.scalers, conj_sign,
                                basis_fingerprint.empty() ? ds.basis_fingerprint
                                                          : std::move(basis_fingerprint));
  res.val_groups = split.val_groups;

  NadamState opt;
  opt.init(cfg.hidden, res.model.n_in());
  Gradients grads;

  const Batch val_batch =
      split.val_idx.empty() ? Batch{} : make_batch(ds, split.val_idx);

  MatX w1_sum;
  VecX b1_sum, w2_sum;
  int n_avg = 0;
  if (cfg.tail_average > 0) {
    w1_sum = MatX::Zero(cfg.hidden, res.model.n_in());
    b1_sum = VecX::Zero(cfg.hidden);
    w2_sum = VecX::Zero(cfg.hidden);
  }

  std::vector<int> order = split.train_idx;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, rng);
    LossBreakdown train_mean;
    int n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      const std::vector<int> idx(order.begin() + start, order.begin() + stop);
      const Batch batch = make_batch(ds, idx);
      const LossBreakdown l = loss(res.model, batch, cfg, &grads);
      check_finite(l);
      nadam_step(res.model.net, grads, opt, cfg.learning_rate);
      train_mean.total += l.total;
      train_mean.pot += l.pot;
      train_mean.conj += l.conj;
      train_mean.diss += l.diss;
      train_mean.reg += l.reg;
      ++n_batches;
    }
    const Scalar inv = 1.0 / static_cast<Scalar>(std::max(n_batches, 1));
    train_mean.total *= inv;
    train_mean.pot *= inv;
    train_mean.conj *= inv;
    train_mean.diss *= inv;
    train_mean.reg *= inv;

    EpochStats stats;
    stats.epoch = epoch;
    stats.train = train_mean;
    if (val_batch.size() > 0) {
      stats.val = loss(res.model, val_batch, cfg, nullptr);
      check_finite(stats.val);
    }
    res.curves.push_back(stats);

    if (cfg.tail_average > 0 && epoch >= cfg.epochs - cfg.tail_average) {
      w1_sum += res.model.net.w1;
      b1_sum += res.model.net.b1;
      w2_sum += res.model.net.w2;
      ++n_avg;
    }

    const Scalar monitored = val_batch.size() > 0 ? stats.val.total : train_mean.total;
    if (cfg.early_stop > 0.0 && monitored <= cfg.early_stop) {
      res.early_stopped = true;
      break;
    }
  }
  if (n_avg > 0) {
    res.model.net.w1 = w1_sum / static_cast<Scalar>(n_avg);
    res.model.net.b1 = b1_sum / static_cast<Scalar>(n_avg);
    res.model.net.w2 = w2_sum / static_cast<Scalar>(n_avg);
  }
  return res;
}

namespace {

VecX evolution_scale_in(const EvolutionModel& m, const VecX& cv, const VecX& z,
                        const VecX& dcv) {
  VecX x(m.n_in());
  x.head(m.n_cv) = cv;
  x.segment(m.n_cv, m.r) = z;
  x.tail(m.n_cv) = dcv;
  return x.cwiseQuotient(m.in_scale);
}

} // namespace

VecX evolution_predict(const EvolutionModel& m, const VecX& cv, const VecX& z, const VecX& dcv) {
  if (cv.size() != m.n_cv || z.size() != m.r || dcv.size() != m.n_cv)
    throw DimensionMismatch("evolution_predict: input dimensions mismatch");
  const VecX x = evolution_scale_in(m, cv, z, dcv);
  const VecX a = m.w1 * x + m.b1;
  // anchored like the energy net: the pristine state is a fixed point
  return (m.w2 * (a.cwiseAbs2() - m.b1.cwiseAbs2())).cwiseProduct(m.out_scale);
}

EvolutionTrainResult train_evolution(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  const int n = ds.n_samples();
  const int ncv = ds.n_cv();
  const int r = ds.r();

  // assemble (cv, z at increment start, d_cv) -> dz tuples
  MatX cv_in(ncv, n), z_in(r, n), dcv_in(ncv, n), dz_out(r, n);
  for (int i = 0; i < n; ++i) {
    const bool first = i == 0 || ds.record[i] != ds.record[i - 1];
    const VecX cv_prev = first ? VecX::Zero(ncv).eval() : ds.cv.col(i - 1).eval();
    const VecX z_prev = first ? VecX::Zero(r).eval() : ds.z.col(i - 1).eval();
    cv_in.col(i) = cv_prev;
    z_in.col(i) = z_prev;
    dcv_in.col(i) = ds.cv.col(i) - cv_prev;
    dz_out.col(i) = ds.zdot.col(i); // unit pseudo-time: rate == increment
  }

  EvolutionModel model;
  model.n_cv = ncv;
  model.r = r;
  model.in_scale.resize(2 * ncv + r);
  constexpr Scalar floor = 1e-12;
  for (int k = 0; k < ncv; ++k)
    model.in_scale(k) = std::max(cv_in.row(k).cwiseAbs().maxCoeff(), floor);
  for (int j = 0; j < r; ++j)
    model.in_scale(ncv + j) = std::max(z_in.row(j).cwiseAbs().maxCoeff(), floor);
  for (int k = 0; k < ncv; ++k)
    model.in_scale(ncv + r + k) = std::max(dcv_in.row(k).cwiseAbs().maxCoeff(), floor);
  model.out_scale.resize(r);
  for (int j = 0; j < r; ++j)
    model.out_scale(j) = std::max(dz_out.row(j).cwiseAbs().maxCoeff(), floor);

  // scaled training matrices
  MatX x_all(2 * ncv + r, n);
  x_all.topRows(ncv) = model.in_scale.head(ncv).cwiseInverse().asDiagonal() * cv_in;
  x_all.middleRows(ncv, r) =
      model.in_scale.segment(ncv, r).cwiseInverse().asDiagonal() * z_in;
  x_all.bottomRows(ncv) = model.in_scale.tail(ncv).cwiseInverse().asDiagonal() * dcv_in;
  const MatX y_all = model.out_scale.cwiseInverse().asDiagonal() * dz_out;

  Rng rng(cfg.seed);
  const Split split = split_by_group(ds, cfg.val_fraction, rng);
  if (split.train_idx.empty())
    throw ConfigError("train_evolution: empty training split");

  const QuadLayerNet seed_net = init_network(2 * ncv + r, cfg.hidden, cfg.seed);
  model.w1 = seed_net.w1;
  model.b1 = seed_net.b1;
  Rng rng_out(cfg.seed + 1);
  model.w2.resize(r, cfg.hidden);
  const Scalar lim = std::sqrt(6.0 / static_cast<Scalar>(cfg.hidden + r));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < cfg.hidden; ++j)
      model.w2(i, j) = rng_out.uniform(-lim, lim);

  MatX m1_w1 = MatX::Zero(model.w1.rows(), model.w1.cols());
  MatX m2_w1 = m1_w1;
  VecX m1_b1 = VecX::Zero(cfg.hidden), m2_b1 = m1_b1;
  MatX m1_w2 = MatX::Zero(r, cfg.hidden), m2_w2 = m1_w2;
  long t = 0;
  NadamConstants constants;

  auto eval_mse = [&](const std::vector<int>& idx) {
    if (idx.empty())
      return 0.0;
    Scalar sum = 0.0;
    for (int i : idx) {
      const VecX a = model.w1 * x_all.col(i) + model.b1;
      sum += (model.w2 * (a.cwiseAbs2() - model.b1.cwiseAbs2()) - y_all.col(i)).squaredNorm();
    }
    return sum / static_cast<Scalar>(idx.size() * r);
  };

  EvolutionTrainResult res;
  std::vector<int> order = split.train_idx;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      const int b = static_cast<int>(stop - start);
      MatX x(2 * ncv + r, b), y(r, b);
      for (int j = 0; j < b; ++j) {
        x.col(j) = x_all.col(order[start + j]);
        y.col(j) = y_all.col(order[start + j]);
      }
      const MatX a = (model.w1 * x).colwise() + model.b1;
      const MatX a2 = a.cwiseAbs2();
      const VecX a0_sq = model.b1.cwiseAbs2(); // anchor at the scaled origin
      const MatX resid = (model.w2 * a2).colwise() - model.w2 * a0_sq;
      const MatX resid_y = resid - y;                             // r x B
      const Scalar coeff = 2.0 / static_cast<Scalar>(b * r);
      const VecX resid_sum = resid_y.rowwise().sum();
      const MatX g_w2 =
          coeff * (resid_y * a2.transpose() - resid_sum * a0_sq.transpose()); // r x h
      const MatX da = 2.0 * a.cwiseProduct(model.w2.transpose() * resid_y) * coeff;
      const MatX g_w1 = da * x.transpose();
      const VecX g_b1 =
          da.rowwise().sum() - 2.0 * coeff * (model.w2.transpose() * resid_sum).cwiseProduct(model.b1);
      t += 1;
      nadam_update(g_w1, m1_w1, m2_w1, model.w1, t, cfg.learning_rate, constants);
      nadam_update(g_b1, m1_b1, m2_b1, model.b1, t, cfg.learning_rate, constants);
      nadam_update(g_w2, m1_w2, m2_w2, model.w2, t, cfg.learning_rate, constants);
    }
    const Scalar train_mse = eval_mse(split.train_idx);
    if (!std::isfinite(train_mse))
      throw Diverged("train_evolution: loss became non-finite");
    res.train_curve.push_back(train_mse);
    res.val_curve.push_back(eval_mse(split.val_idx));
    if (cfg.early_stop > 0.0 &&
        (split.val_idx.empty() ? train_mse : res.val_curve.back()) <= cfg.early_stop)
      break;
  }
  res.model = std::move(model);
  return res;
}

PathPrediction infer_teacher_forced(const EnergyModel& m, const Dataset& ds,
                                    const std::vector<int>& idx) {
  m.validate();
  PathPrediction out;
  const int n = static_cast<int>(idx.size());
  out.conj.resize(m.n_cv, n);
  out.pot.resize(n);
  out.diss.resize(n);
  out.z.resize(m.r, n);
  for (int j = 0; j < n; ++j) {
    const int i = idx[j];
    const VecX cv = ds.cv.col(i);
    const VecX z = ds.z.col(i);
    out.conj.col(j) = conjugate_prediction(m, cv, z);
    out.pot(j) = forward_energy(m, cv, z);
    out.diss(j) = dissipation_pred(m, cv, z, ds.zdot.col(i));
    out.z.col(j) = z;
  }
  return out;
}

PathPrediction infer_autonomous(const EnergyModel& m, const EvolutionModel* evolution,
                                const MatX& cv_increments, const VecX& z0) {
  m.validate();
  if (evolution == nullptr)
    throw ModeMismatch("infer_autonomous: no evolution model supplied");
  if (cv_increments.rows() != m.n_cv)
    throw DimensionMismatch("infer_autonomous: increment dimension mismatch");
  if (z0.size() != m.r)
    throw DimensionMismatch("infer_autonomous: z0 dimension mismatch");

  const int n = static_cast<int>(cv_increments.cols());
  PathPrediction out;
  out.conj.resize(m.n_cv, n);
  out.pot.resize(n);
  out.diss.resize(n);
  out.z.resize(m.r, n);

  VecX cv = VecX::Zero(m.n_cv);
  VecX z = z0;
  for (int t = 0; t < n; ++t) {
    const VecX dz = evolution_predict(*evolution, cv, z, cv_increments.col(t));
    cv += cv_increments.col(t);
    z += dz;
    out.conj.col(t) = conjugate_prediction(m, cv, z);
    out.pot(t) = forward_energy(m, cv, z);
    out.diss(t) = dissipation_pred(m, cv, z, dz);
    out.z.col(t) = z;
  }
  return out;
}

} // namespace podtann::tann
