#pragma once

#include "podtann/dataset.hpp"
#include "podtann/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace podtann::tann {

// Single-hidden-layer network with elementwise-square activation and a
// linear, bias-free output: N(x) = w2 . (W1 x + b1)^2. An everywhere-smooth
// polynomial, so conjugate quantities obtained by differentiation are exact.
struct QuadLayerNet {
  MatX w1; // h x n_in
  VecX b1; // h
  VecX w2; // h

  int hidden() const { return static_cast<int>(b1.size()); }
  int n_in() const { return static_cast<int>(w1.cols()); }
};

// Glorot-uniform weights, zero hidden biases, deterministic per seed.
QuadLayerNet init_network(int n_in, int hidden, std::uint64_t seed);

// Value and input gradient in scaled space. The forward map is anchored:
// the net value at the scaled origin (the pristine state) is subtracted,
// so the predicted potential vanishes there for any parameters.
Scalar net_value(const QuadLayerNet& net, const VecX& x);
VecX net_input_gradient(const QuadLayerNet& net, const VecX& x);

// Energy/Gibbs potential model: the network plus the scaler chain and the
// sign convention of the conjugate derivative (+1: stress = dPsi/dE,
// -1: displacement = -dPhi/dF).
struct EnergyModel {
  QuadLayerNet net;
  Scalers scalers;
  int n_cv = 6;
  int r = 0;
  Scalar conj_sign = 1.0;
  std::string basis_fingerprint;

  int n_in() const { return n_cv + r; }
  void validate() const;
};

using GibbsModel = EnergyModel;

EnergyModel make_energy_model(int n_cv, int r, int hidden, std::uint64_t seed,
                              const Scalers& scalers, Scalar conj_sign = 1.0,
                              std::string basis_fingerprint = {});

// Raw-unit predictions (kPa / kN / kN m) through the scaler chain rule.
Scalar forward_energy(const EnergyModel& m, const VecX& cv, const VecX& z);
VecX conjugate_prediction(const EnergyModel& m, const VecX& cv, const VecX& z);
Scalar dissipation_pred(const EnergyModel& m, const VecX& cv, const VecX& z, const VecX& zdot);

// Stress as the analytic strain gradient of the energy (Helmholtz models).
inline VecX stress_from_energy(const EnergyModel& m, const VecX& e, const VecX& z) {
  return conjugate_prediction(m, e, z);
}

// Adds a quadratic form g(Z) = 1/2 Z^T q2 Z + q1 . Z to the learned
// potential by appending hidden units that depend on Z only. Conjugate
// predictions are unchanged for every input; the dissipation shifts by
// -dg/dZ . Zdot.
EnergyModel add_z_offset(const EnergyModel& m, const MatX& q2, const VecX& q1);

enum class LossVariant { Full, Reduced };

struct TrainConfig {
  LossVariant variant = LossVariant::Reduced;
  Scalar w_pot = 1.0;   // potential-value term (Full only)
  Scalar w_conj = 1.0;  // stress / displacement term
  Scalar w_diss = 1.0;  // dissipation-value term (Full only)
  Scalar w_reg = 1.0;   // penalty on negative predicted dissipation
  Scalar learning_rate = 5e-5;
  int batch = 1000;
  int epochs = 1000;
  std::uint64_t seed = 0;
  Scalar early_stop = 0.0;    // validation-loss threshold, 0 disables
  Scalar val_fraction = 0.1;  // split by source path, not by increment
  int hidden = 100;
  // Averages the weights of the final tail_average epochs into the
  // returned model (0 disables). Damps the per-epoch wander of the
  // state-gradient field once the loss has plateaued, which otherwise
  // makes the predicted dissipation checkpoint-dependent.
  int tail_average = 0;

  void validate() const;
};

struct LossBreakdown {
  Scalar total = 0.0;
  Scalar pot = 0.0;
  Scalar conj = 0.0;
  Scalar diss = 0.0;
  Scalar reg = 0.0;
};

struct Gradients {
  MatX w1;
  VecX b1;
  VecX w2;
  void set_zero(int hidden, int n_in);
};

// Scaled, column-per-sample view of a batch.
struct Batch {
  MatX x;           // n_in x B
  MatX conj_t;      // n_cv x B
  VecX pot_t;       // B
  VecX diss_t;      // B
  MatX zdot_scaled; // r x B

  int size() const { return static_cast<int>(pot_t.size()); }
};

Batch make_batch(const Dataset& ds, const std::vector<int>& idx);

// Mean-squared per-term loss in scaled units. The conjugate term carries
// the second-order parameter sensitivities (the predicted stress is itself
// a gradient), assembled analytically. Pass grads = nullptr to skip them.
LossBreakdown loss(const EnergyModel& m, const Batch& batch, const TrainConfig& cfg,
                   Gradients* grads = nullptr);

// Nesterov-Adam update (bias-corrected first/second moments).
struct NadamConstants {
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
};

// Elementwise update shared by every parameter array; t counts steps from 1.
template <typename T>
void nadam_update(const T& grad, T& mom1, T& mom2, T& x, long t, Scalar lr,
                  const NadamConstants& k = {}) {
  mom1 = k.beta1 * mom1 + (1.0 - k.beta1) * grad;
  mom2 = k.beta2 * mom2 + (1.0 - k.beta2) * grad.cwiseProduct(grad);
  const Scalar m2c = 1.0 - std::pow(k.beta2, static_cast<Scalar>(t));
  const Scalar b1t = std::pow(k.beta1, static_cast<Scalar>(t));
  const Scalar b1tp1 = b1t * k.beta1;
  x.array() -= lr *
               (k.beta1 / (1.0 - b1tp1) * mom1.array() +
                (1.0 - k.beta1) / (1.0 - b1t) * grad.array()) /
               ((mom2.array() / m2c).sqrt() + k.epsilon);
}

struct NadamState {
  Gradients mom1, mom2;
  long t = 0;
  NadamConstants constants;

  void init(int hidden, int n_in);
};

void nadam_step(QuadLayerNet& net, const Gradients& grads, NadamState& state, Scalar lr);

struct EpochStats {
  int epoch = 0;
  LossBreakdown train;
  LossBreakdown val;
};

struct TrainResult {
  EnergyModel model;
  std::vector<EpochStats> curves;
  bool early_stopped = false;
  std::vector<int> val_groups;
};

// Mini-batch Nadam training with a by-path validation split and optional
// early stop on the validation loss. Deterministic for a fixed seed.
TrainResult train(const Dataset& ds, const TrainConfig& cfg, Scalar conj_sign = 1.0,
                  std::string basis_fingerprint = {});

// Evolution-law regressor (E, Z, dE) -> dZ, same width and activation.
struct EvolutionModel {
  MatX w1;      // h x (2*n_cv + r)
  VecX b1;      // h
  MatX w2;      // r x h, output bias fixed at zero
  VecX in_scale;  // 2*n_cv + r
  VecX out_scale; // r
  int n_cv = 6;
  int r = 0;

  int n_in() const { return 2 * n_cv + r; }
};

struct EvolutionTrainResult {
  EvolutionModel model;
  std::vector<Scalar> train_curve; // MSE per epoch, scaled units
  std::vector<Scalar> val_curve;
};

EvolutionTrainResult train_evolution(const Dataset& ds, const TrainConfig& cfg);

VecX evolution_predict(const EvolutionModel& m, const VecX& cv, const VecX& z, const VecX& dcv);

struct PathPrediction {
  MatX conj;  // n_cv x n, raw units
  VecX pot;   // raw units
  VecX diss;  // raw units
  MatX z;     // r x n (inputs used, teacher-forced or rolled out)
};

// Teacher-forced inference: consumes the recorded Z / Zdot of the samples.
PathPrediction infer_teacher_forced(const EnergyModel& m, const Dataset& ds,
                                    const std::vector<int>& idx);

// Autonomous inference: advances Z with the evolution model from z0 along
// a path of raw conjugate-variable increments.
PathPrediction infer_autonomous(const EnergyModel& m, const EvolutionModel* evolution,
                                const MatX& cv_increments, const VecX& z0);

} // namespace podtann::tann
