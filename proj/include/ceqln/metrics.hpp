#pragma once

#include <vector>

#include "ceqln/design.hpp"

namespace ceqln {

// Mean of squared errors over all N samples and D dims. Throws kConfig on shape mismatch.
double mse_shape(const MatrixXd& fitted, const MatrixXd& targets);

// Index of the sample closest to t; ties resolve to the earlier index.
Index nearest_sample(const VectorXd& times, double t);

// Mean squared deviation from the equality rows of `cs`, reading the D x N
// trajectory at the nearest sample. Zero when there are no equality rows.
double mse_const(const MatrixXd& fitted, const VectorXd& times, const ConstraintSet& cs);

struct PickPlaceWindow {
  double t_lo = 0.3;
  double t_hi = 0.65;
  Index x_dim = 0;
  double x_min = 0.55;
  Index z_dim = 2;
  double z_min = 0.6;
};

struct PickPlaceMetrics {
  double mse1 = 0.0;      // sum over r of the mean squared error outside the window
  double mse1_sum = 0.0;  // same, summed over samples instead of averaged
  double mse2 = 0.0;      // squared x-plane violations at the window times
  double mse3 = 0.0;      // squared z-plane violations at the window times
  double mse4 = 0.0;      // squared gap between the last sample and the goal
};

// fitted[r] is the D x N trajectory for adaptation r, goals[r] its final point
// and window_times the sampled obstacle window.
PickPlaceMetrics mse_suite_pickplace(const std::vector<MatrixXd>& fitted, const TrajectoryDataset& data,
                                     const VectorXd& window_times, const std::vector<VectorXd>& goals,
                                     const PickPlaceWindow& window = {});

}  // namespace ceqln
