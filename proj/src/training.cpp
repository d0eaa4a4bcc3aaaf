#include "ceqln/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ceqln/error.hpp"
#include "ceqln/parallel.hpp"

namespace ceqln {

void validate(const TrainingConfig& config) {
  if (config.beta < 1) throw Error(ErrorKind::kConfig, "beta must be at least 1");
  if (config.epochs < 1) throw Error(ErrorKind::kConfig, "epochs must be at least 1");
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw Error(ErrorKind::kConfig, "learning_rate must be a finite nonnegative number");
  }
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
    throw Error(ErrorKind::kConfig, "lambda_w must be a finite nonnegative number");
  }
  if (config.network.basis_count < 1) throw Error(ErrorKind::kConfig, "basis_count must be at least 1");
}

InitializationResult initialize_stage(const TrainingConfig& config, const TrajectoryDataset& data,
                                      const std::vector<ConstraintSet>& sets) {
  validate(config);
  UniformSource source(config.seed);
  std::vector<NetworkParams> draws;
  draws.reserve(static_cast<std::size_t>(config.beta));
  for (int i = 0; i < config.beta; ++i) draws.push_back(init_uniform(config.network, config.init_ranges, source));

  InitializationResult result;
  result.draw_losses.assign(draws.size(), std::numeric_limits<double>::infinity());
  std::vector<std::string> failures(draws.size());
  const PipelineOptions options = config.pipeline();
  parallel_for(draws.size(), [&](std::size_t i) {
    const LossReport report = total_loss(draws[i], config.network, data, sets, options);
    result.draw_losses[i] = std::isfinite(report.loss) ? report.loss : std::numeric_limits<double>::infinity();
    failures[i] = report.failure;
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < draws.size(); ++i) {
    if (result.draw_losses[i] < result.draw_losses[best]) best = i;
  }
  if (!std::isfinite(result.draw_losses[best])) {
    std::ostringstream os;
    os << "initialization failed: all " << draws.size()
       << " draws were infeasible; consider widening the initialization ranges (last failure: " << failures.back()
       << ")";
    throw Error(ErrorKind::kInitialization, os.str());
  }
  result.selected = best;
  result.params = std::move(draws[best]);
  return result;
}

FitResult train_from(const TrainingConfig& config, NetworkParams start, const TrajectoryDataset& data,
                     const std::vector<ConstraintSet>& sets) {
  validate(config);
  const PipelineOptions options = config.pipeline();
  FitResult result;
  NetworkParams theta = std::move(start);
  result.best_loss = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    GradientReport step;
    try {
      step = loss_and_gradient(theta, config.network, data, sets, options, config.fd_fallback);
    } catch (Error& e) {
      if (!e.epoch) e.epoch = epoch;
      throw;
    }
    if (!std::isfinite(step.loss) || !step.gradient.allFinite()) {
      Error err(ErrorKind::kNumerical, "non-finite loss or gradient at epoch " + std::to_string(epoch));
      err.epoch = epoch;
      throw err;
    }
    if (step.finite_difference) ++result.fd_epochs;
    double mse = 0.0;
    double violation = 0.0;
    Index rows = 0;
    for (const ConstraintFit& fit : step.fits) {
      const ConstraintResiduals res = residuals(fit);
      mse += res.mean_square_equality * static_cast<double>(fit.eq.rows());
      rows += fit.eq.rows();
      violation = std::max(violation, res.max_inequality_violation);
    }
    result.constraint_mse.push_back(rows > 0 ? mse / static_cast<double>(rows) : 0.0);
    result.inequality_violation.push_back(violation);
    result.loss_history.push_back(step.loss);
    if (step.loss < result.best_loss) {
      result.best_loss = step.loss;
      result.best_epoch = static_cast<std::size_t>(epoch);
      result.params = theta;
      result.fits = std::move(step.fits);
    }
    result.best_loss_history.push_back(result.best_loss);
    if (config.learning_rate != 0.0) theta.assign(theta.flatten() - config.learning_rate * step.gradient);
  }
  return result;
}

FitResult train(const TrainingConfig& config, const TrajectoryDataset& data, const std::vector<ConstraintSet>& sets) {
  InitializationResult init = initialize_stage(config, data, sets);
  FitResult result = train_from(config, init.params, data, sets);
  result.initialization = std::move(init);
  return result;
}

}  // namespace ceqln
