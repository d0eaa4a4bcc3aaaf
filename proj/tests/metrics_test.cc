#include <gtest/gtest.h>

#include "ceqln/adaptation.hpp"
#include "ceqln/metrics.hpp"
#include "ceqln/synthetic.hpp"
#include "support.hpp"

namespace ceqln {
namespace {

using testing::kind_of;

TEST(MseShape, Arithmetic) {
  const MatrixXd y = MatrixXd::Random(1, 10);
  EXPECT_EQ(mse_shape(y, y), 0.0);
  EXPECT_DOUBLE_EQ(mse_shape(y.array() + 1.0, y), 1.0);
  EXPECT_EQ(kind_of([&] { mse_shape(MatrixXd::Zero(2, 10), y); }), ErrorKind::kConfig);
}

TEST(NearestSample, TiesGoEarlier) {
  const VectorXd t = linspace(0.0, 1.0, 5);
  EXPECT_EQ(nearest_sample(t, 0.0), 0);
  EXPECT_EQ(nearest_sample(t, 0.125), 0);
  EXPECT_EQ(nearest_sample(t, 0.13), 1);
  EXPECT_EQ(nearest_sample(t, 2.0), 4);
}

TEST(MseConst, OffByTwo) {
  const VectorXd t = linspace(0.0, 1.0, 11);
  MatrixXd y = MatrixXd::Zero(1, 11);
  ConstraintSet cs;
  EXPECT_EQ(mse_const(y, t, cs), 0.0);
  cs.equalities = {{0.5, 0, 2.0}};
  EXPECT_DOUBLE_EQ(mse_const(y, t, cs), 4.0);
}

TEST(MseConst, PipelineOutputIsExact) {
  const SyntheticTask letter = generate_synthetic(Task::kLetter2d, 0.0, 1);
  const NetworkParams p = init_uniform(letter.config.network, letter.config.init_ranges, 4);
  const Adapter adapter(p, letter.config.network, letter.data, letter.config.pipeline());
  for (const ConstraintSet& cs : letter.training) {
    const ConstraintFit fit = adapter.adapt(cs);
    EXPECT_LE(mse_const(fit.fitted, letter.data.times, cs), 1e-12) << cs.r;
  }
  const ConstraintFit free = adapter.adapt(ConstraintSet{});
  EXPECT_GT(mse_const(free.fitted, letter.data.times, letter.training[0]), 0.0);
}

struct Window {
  TrajectoryDataset data;
  VectorXd window_times;
  std::vector<VectorXd> goals;
};

// Trajectory sitting well inside both planes during the window.
Window clear_of_planes() {
  Window w;
  w.data.times = linspace(0.0, 1.0, 101);
  w.data.targets = MatrixXd::Zero(3, 101);
  for (Index n = 0; n < 101; ++n) {
    const double t = w.data.times(n);
    w.data.targets(0, n) = 0.7;
    w.data.targets(2, n) = t >= 0.3 && t <= 0.65 ? 0.8 : 0.2;
  }
  w.window_times = linspace(0.3, 0.65, 8);
  w.goals = {w.data.targets.col(100)};
  return w;
}

TEST(PickPlace, RespectingPlanesGivesZeroHinge) {
  const Window w = clear_of_planes();
  const PickPlaceMetrics m = mse_suite_pickplace({w.data.targets}, w.data, w.window_times, w.goals);
  EXPECT_EQ(m.mse1, 0.0);
  EXPECT_EQ(m.mse2, 0.0);
  EXPECT_EQ(m.mse3, 0.0);
  EXPECT_EQ(m.mse4, 0.0);
}

TEST(PickPlace, SingleViolationContributesItsSquare) {
  const Window w = clear_of_planes();
  MatrixXd y = w.data.targets;
  const Index n = nearest_sample(w.data.times, w.window_times(3));
  y(0, n) = 0.45;
  const PickPlaceMetrics m = mse_suite_pickplace({y}, w.data, w.window_times, w.goals);
  EXPECT_NEAR(m.mse2, 0.01, 1e-15);
  EXPECT_EQ(m.mse3, 0.0);
}

TEST(PickPlace, HingeIsMonotoneInDepth) {
  const Window w = clear_of_planes();
  double last = 0.0;
  for (double depth : {0.0, 0.01, 0.05, 0.1, 0.3}) {
    MatrixXd y = w.data.targets;
    for (Index j = 0; j < w.window_times.size(); ++j) y(2, nearest_sample(w.data.times, w.window_times(j))) = 0.6 - depth;
    const double mse3 = mse_suite_pickplace({y}, w.data, w.window_times, w.goals).mse3;
    if (depth == 0.0) {
      EXPECT_EQ(mse3, 0.0);
    } else {
      EXPECT_GT(mse3, last);
    }
    last = mse3;
  }
}

TEST(PickPlace, GoalAndShapeTerms) {
  const Window w = clear_of_planes();
  MatrixXd y = w.data.targets;
  y(1, 100) += 0.5;
  y(1, 0) += 1.0;
  const PickPlaceMetrics m = mse_suite_pickplace({y}, w.data, w.window_times, w.goals);
  EXPECT_DOUBLE_EQ(m.mse4, 0.25);
  EXPECT_GT(m.mse1, 0.0);
  EXPECT_GT(m.mse1_sum, m.mse1);
}

TEST(PickPlace, PipelineOutputMeetsEveryPlane) {
  const SyntheticTask task = generate_synthetic(Task::kPickPlace3d, 0.0, 1);
  const NetworkParams p = init_uniform(task.config.network, task.config.init_ranges, 6);
  const Adapter adapter(p, task.config.network, task.data, task.config.pipeline());
  std::vector<MatrixXd> fitted;
  std::vector<VectorXd> goals;
  for (const ConstraintSet& cs : task.training) {
    fitted.push_back(adapter.adapt(cs).fitted);
    VectorXd goal(3);
    for (const EqualityRow& row : cs.equalities)
      if (row.t == 1.0) goal(row.dim) = row.value;
    goals.push_back(goal);
  }
  const PickPlaceMetrics m = mse_suite_pickplace(fitted, task.data, pickplace_window_times(), goals);
  EXPECT_LE(m.mse2, 1e-12);
  EXPECT_LE(m.mse3, 1e-12);
  EXPECT_LE(m.mse4, 1e-12);
}

}  // namespace
}  // namespace ceqln
