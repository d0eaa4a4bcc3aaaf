#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ceqln/training.hpp"

namespace ceqln {

// Seeded stand-ins for the demonstration datasets, with closed-form trajectories
// shaped to each task's constraint geometry.
enum class Task { kToy1d, kLetter2d, kCleaning3d, kAssembly3d, kPickPlace3d };

std::string_view to_string(Task task);
Task task_from_string(std::string_view name);

struct SyntheticTask {
  Task task = Task::kToy1d;
  TrajectoryDataset data;
  std::vector<ConstraintSet> training;
  std::vector<ConstraintSet> held_out;
  TrainingConfig config;  // hyperparameters tuned for the task
};

// noise is the half-width of uniform noise added to every target coordinate.
SyntheticTask generate_synthetic(Task task, double noise, std::uint64_t seed);

// n equally spaced points on [a, b] with both ends exact.
VectorXd linspace(double a, double b, Index n);

// Building blocks shared with tests and tools.
ConstraintSet endpoint_constraints(int r, const VectorXd& start, const VectorXd& goal);
VectorXd pickplace_window_times();
ConstraintSet letter_unseen_endpoints();

}  // namespace ceqln
