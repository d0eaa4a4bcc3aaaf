#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ceqln/design.hpp"
#include "ceqln/network.hpp"
#include "ceqln/qp.hpp"

namespace ceqln {

struct PipelineOptions {
  double lambda = 0.0;
  CostMode mode = CostMode::kPaper;
  QpSettings qp;
};

// Constraint-independent part of an evaluation: depends only on theta and the data.
struct DataTerms {
  DesignMatrix phi;
  CostTerms cost;
  MatrixXd targets;  // D x N
};

DataTerms data_terms(const NetworkParams& params, const NetworkSpec& spec, const TrajectoryDataset& data,
                     const PipelineOptions& options);

// One solved constraint set.
struct ConstraintFit {
  int r = 1;
  EqualityBlock eq;
  InequalityBlock ineq;
  QpProblem problem;
  QpSolution solution;
  MatrixXd fitted;  // D x N
};

// Stacked weights [w_0; ...; w_{D-1}] reshaped to D x M.
MatrixXd weight_rows(const VectorXd& w, Index dims);
// D x N trajectory Phi * w_d for every dimension.
MatrixXd fitted_trajectory(const DesignMatrix& phi, const VectorXd& w, Index dims);

// Solver errors are rethrown with constraint_set = cs.r.
ConstraintFit fit_constraint_set(const DataTerms& terms, const NetworkParams& params, const NetworkSpec& spec,
                                 const ConstraintSet& cs, const PipelineOptions& options);

// Full forward pipeline for one constraint set.
ConstraintFit evaluate(const NetworkParams& params, const NetworkSpec& spec, const TrajectoryDataset& data,
                       const ConstraintSet& cs, const PipelineOptions& options);

double half_sse(const MatrixXd& fitted, const MatrixXd& targets);

struct ConstraintResiduals {
  double max_equality = 0.0;
  double mean_square_equality = 0.0;
  double max_inequality_violation = 0.0;
};

ConstraintResiduals residuals(const ConstraintFit& fit);

struct LossReport {
  double loss = 0.0;  // +inf when some constraint set fails
  std::optional<int> failed_r;
  std::string failure;
};

// Sum over constraint sets of 1/2 SSE between fitted and target trajectories.
LossReport total_loss(const NetworkParams& params, const NetworkSpec& spec, const TrajectoryDataset& data,
                      const std::vector<ConstraintSet>& sets, const PipelineOptions& options);

struct GradientReport {
  double loss = 0.0;
  VectorXd gradient;  // flattened like NetworkParams::flatten
  std::vector<ConstraintFit> fits;
  std::vector<std::string> warnings;
  bool finite_difference = false;
};

// Loss and its gradient through the QP adjoint. With fd_fallback, a singular
// adjoint switches to central differences (h = 1e-6 scaled by max(1, |theta_i|)).
GradientReport loss_and_gradient(const NetworkParams& params, const NetworkSpec& spec, const TrajectoryDataset& data,
                                 const std::vector<ConstraintSet>& sets, const PipelineOptions& options,
                                 bool fd_fallback = false);

VectorXd finite_difference_gradient(const NetworkParams& params, const NetworkSpec& spec,
                                    const TrajectoryDataset& data, const std::vector<ConstraintSet>& sets,
                                    const PipelineOptions& options, double step = 1e-6);

}  // namespace ceqln
