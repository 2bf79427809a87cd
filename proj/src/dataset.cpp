#include "podtann/dataset.hpp"

#include <algorithm>

namespace podtann {

Scalers Scalers::identity(int n_cv, int r) {
  Scalers s;
  s.h_in = VecX::Ones(n_cv + r);
  s.h_conj = VecX::Ones(n_cv);
  s.s_pot = 1.0;
  s.s_diss = 1.0;
  return s;
}

TrainingSample Dataset::sample(int i) const {
  TrainingSample s;
  const int ncv = n_cv();
  s.cv = cv.col(i).cwiseQuotient(scalers.h_in.head(ncv));
  s.z = z.col(i).cwiseQuotient(scalers.h_in.tail(r()));
  s.zdot = zdot.col(i).cwiseQuotient(scalers.h_in.tail(r()));
  s.conj = conj.col(i).cwiseQuotient(scalers.h_conj);
  s.pot = pot(i) / scalers.s_pot;
  s.diss = diss(i) / scalers.s_diss;
  return s;
}

void Dataset::validate() const {
  const int n = n_samples();
  if (cv.cols() != n || z.cols() != n || zdot.cols() != n || conj.cols() != n ||
      diss.size() != n || static_cast<int>(group.size()) != n ||
      static_cast<int>(record.size()) != n)
    throw ShapeError("Dataset: inconsistent sample counts across blocks");
  if (conj.rows() != cv.rows())
    throw ShapeError("Dataset: conjugate target dimension must match input");
  if (zdot.rows() != z.rows())
    throw ShapeError("Dataset: zdot dimension must match z");
  if (scalers.h_in.size() != cv.rows() + z.rows() || scalers.h_conj.size() != cv.rows())
    throw ShapeError("Dataset: scaler dimensions do not match blocks");
}

namespace {

constexpr Scalar kScaleFloor = 1e-12;

Scalar max_abs(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  return row.size() == 0 ? 0.0 : row.cwiseAbs().maxCoeff();
}

} // namespace

Scalers fit_scalers(const Dataset& raw) {
  const int ncv = raw.n_cv();
  const int r = raw.r();
  Scalers s;
  s.h_in.resize(ncv + r);
  s.h_conj.resize(ncv);
  for (int i = 0; i < ncv; ++i) {
    s.h_in(i) = std::max(max_abs(raw.cv.row(i)), kScaleFloor);
    s.h_conj(i) = std::max(max_abs(raw.conj.row(i)), kScaleFloor);
  }
  for (int j = 0; j < r; ++j)
    s.h_in(ncv + j) = std::max(max_abs(raw.z.row(j)), kScaleFloor);
  s.s_pot = std::max(raw.pot.size() ? raw.pot.cwiseAbs().maxCoeff() : 0.0, kScaleFloor);
  // floor the dissipation scale against the energy scale: on (nearly)
  // elastic data a tiny s_diss would blow the scaled dissipation chain up
  s.s_diss = std::max({raw.diss.size() ? raw.diss.cwiseAbs().maxCoeff() : 0.0,
                       1e-3 * s.s_pot, kScaleFloor});
  return s;
}

} // namespace podtann
