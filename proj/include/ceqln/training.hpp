#pragma once

#include <cstdint>
#include <vector>

#include "ceqln/pipeline.hpp"

namespace ceqln {

struct TrainingConfig {
  NetworkSpec network;
  int beta = 1;
  int epochs = 1;
  double learning_rate = 1e-3;
  double lambda = 0.0;
  std::vector<InitRange> init_ranges{InitRange{}};
  std::uint64_t seed = 0;
  CostMode cost_mode = CostMode::kPaper;
  bool fd_fallback = false;
  QpSettings qp;

  PipelineOptions pipeline() const { return {lambda, cost_mode, qp}; }
};

// Throws kConfig on beta < 1, epochs < 1, negative or non-finite learning rate.
void validate(const TrainingConfig& config);

struct InitializationResult {
  NetworkParams params;
  std::vector<double> draw_losses;  // +inf for infeasible draws
  std::size_t selected = 0;
};

// All beta draws come from one generator seeded with config.seed, in order.
InitializationResult initialize_stage(const TrainingConfig& config, const TrajectoryDataset& data,
                                      const std::vector<ConstraintSet>& sets);

struct FitResult {
  NetworkParams params;  // lowest-loss parameters seen
  InitializationResult initialization;
  std::vector<double> loss_history;         // loss at the start of each epoch
  std::vector<double> best_loss_history;    // running minimum of loss_history
  std::vector<double> constraint_mse;       // mean squared equality residual per epoch
  std::vector<double> inequality_violation; // worst inequality violation per epoch
  std::size_t best_epoch = 0;
  double best_loss = 0.0;
  std::vector<ConstraintFit> fits;  // per constraint set, at params
  std::size_t fd_epochs = 0;        // epochs that fell back to finite differences
};

// Full-batch gradient descent theta <- theta - lr * grad for config.epochs epochs.
FitResult train(const TrainingConfig& config, const TrajectoryDataset& data, const std::vector<ConstraintSet>& sets);

// Continues from given parameters without the initialization stage.
FitResult train_from(const TrainingConfig& config, NetworkParams start, const TrajectoryDataset& data,
                     const std::vector<ConstraintSet>& sets);

}  // namespace ceqln
