#include "ceqln/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ceqln/error.hpp"

namespace ceqln {

double mse_shape(const MatrixXd& fitted, const MatrixXd& targets) {
  if (fitted.rows() != targets.rows() || fitted.cols() != targets.cols()) {
    throw Error(ErrorKind::kConfig, "mse_shape: trajectory is " + std::to_string(fitted.rows()) + "x" +
                                        std::to_string(fitted.cols()) + ", targets are " +
                                        std::to_string(targets.rows()) + "x" + std::to_string(targets.cols()));
  }
  if (fitted.size() == 0) return 0.0;
  return (fitted - targets).squaredNorm() / static_cast<double>(fitted.size());
}

Index nearest_sample(const VectorXd& times, double t) {
  if (times.size() == 0) throw Error(ErrorKind::kConfig, "nearest_sample: empty time grid");
  Index best = 0;
  double gap = std::abs(times(0) - t);
  for (Index n = 1; n < times.size(); ++n) {
    const double g = std::abs(times(n) - t);
    if (g < gap) {
      gap = g;
      best = n;
    }
  }
  return best;
}

double mse_const(const MatrixXd& fitted, const VectorXd& times, const ConstraintSet& cs) {
  if (fitted.cols() != times.size()) throw Error(ErrorKind::kConfig, "mse_const: trajectory and times disagree");
  const std::vector<EqualityRow> rows = deduplicated_equalities(cs);
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const EqualityRow& row : rows) {
    if (row.dim < 0 || row.dim >= fitted.rows()) throw Error(ErrorKind::kConfig, "mse_const: dimension out of range");
    const double e = fitted(row.dim, nearest_sample(times, row.t)) - row.value;
    sum += e * e;
  }
  return sum / static_cast<double>(rows.size());
}

PickPlaceMetrics mse_suite_pickplace(const std::vector<MatrixXd>& fitted, const TrajectoryDataset& data,
                                     const VectorXd& window_times, const std::vector<VectorXd>& goals,
                                     const PickPlaceWindow& window) {
  if (goals.size() != fitted.size()) throw Error(ErrorKind::kConfig, "pick-and-place metrics: one goal per trajectory");
  if (data.size() == 0) throw Error(ErrorKind::kConfig, "pick-and-place metrics: empty dataset");
  const Index dims = data.dims();
  if (window.x_dim >= dims || window.z_dim >= dims) {
    throw Error(ErrorKind::kConfig, "pick-and-place metrics: plane dimension out of range");
  }
  std::vector<Index> window_idx;
  for (Index k = 0; k < window_times.size(); ++k) window_idx.push_back(nearest_sample(data.times, window_times(k)));
  Index last = 0;
  for (Index n = 1; n < data.size(); ++n) {
    if (data.times(n) >= data.times(last)) last = n;
  }

  PickPlaceMetrics m;
  for (std::size_t r = 0; r < fitted.size(); ++r) {
    const MatrixXd& y = fitted[r];
    if (y.rows() != dims || y.cols() != data.size()) {
      throw Error(ErrorKind::kConfig, "pick-and-place metrics: trajectory " + std::to_string(r) + " has wrong shape");
    }
    if (goals[r].size() != dims) throw Error(ErrorKind::kConfig, "pick-and-place metrics: goal has wrong size");
    double outside = 0.0;
    Index count = 0;
    for (Index n = 0; n < data.size(); ++n) {
      const double t = data.times(n);
      if (t >= window.t_lo && t <= window.t_hi) continue;
      outside += (y.col(n) - data.targets.col(n)).squaredNorm();
      ++count;
    }
    m.mse1_sum += outside;
    if (count > 0) m.mse1 += outside / static_cast<double>(count * dims);
    for (const Index n : window_idx) {
      const double dx = window.x_min - y(window.x_dim, n);
      const double dz = window.z_min - y(window.z_dim, n);
      if (dx > 0.0) m.mse2 += dx * dx;
      if (dz > 0.0) m.mse3 += dz * dz;
    }
    m.mse4 += (goals[r] - y.col(last)).squaredNorm();
  }
  return m;
}

}  // namespace ceqln
