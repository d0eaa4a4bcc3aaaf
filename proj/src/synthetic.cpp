#include "ceqln/synthetic.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "ceqln/error.hpp"

namespace ceqln {

std::string_view to_string(Task task) {
  switch (task) {
    case Task::kToy1d:
      return "toy1d";
    case Task::kLetter2d:
      return "letter2d";
    case Task::kCleaning3d:
      return "cleaning3d";
    case Task::kAssembly3d:
      return "assembly3d";
    case Task::kPickPlace3d:
      return "pickplace3d";
  }
  return "unknown";
}

Task task_from_string(std::string_view name) {
  for (Task t : {Task::kToy1d, Task::kLetter2d, Task::kCleaning3d, Task::kAssembly3d, Task::kPickPlace3d}) {
    if (name == to_string(t)) return t;
  }
  throw Error(ErrorKind::kConfig, "unknown task '" + std::string(name) + "'");
}

VectorXd linspace(double a, double b, Index n) {
  VectorXd t(n);
  if (n == 1) {
    t(0) = a;
    return t;
  }
  for (Index i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(n - 1);
    t(i) = (1.0 - s) * a + s * b;
  }
  return t;
}

ConstraintSet endpoint_constraints(int r, const VectorXd& start, const VectorXd& goal) {
  ConstraintSet cs;
  cs.r = r;
  for (Index d = 0; d < start.size(); ++d) cs.equalities.push_back({0.0, d, start(d)});
  for (Index d = 0; d < goal.size(); ++d) cs.equalities.push_back({1.0, d, goal(d)});
  return cs;
}

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Index kPickPlaceSamples = 1581;  // 1580 steps: the obstacle window lands on every 7th sample

double lerp(double a, double b, double s) { return (1.0 - s) * a + s * b; }
// Quintic smoothstep, 0 at s <= 0 and 1 at s >= 1.
double smooth(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}
// 16 t^2 (1 - t)^2: vanishes exactly at both ends, 1 at t = 0.5.
double bump(double t) { return 16.0 * t * t * (1.0 - t) * (1.0 - t); }

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

LayerSpec eql_block(int copies) {
  return repeat_layer(copies, {Activation::kIdentity, Activation::kSine, Activation::kCosine, Activation::kSigmoid,
                               Activation::kSech, Activation::kProduct});
}

// Appends demonstrations back to back.
struct Builder {
  std::vector<double> times;
  std::vector<std::vector<double>> rows;

  explicit Builder(Index dims) : rows(static_cast<std::size_t>(dims)) {}

  template <typename F>
  void demo(Index samples, F&& f) {
    const VectorXd t = linspace(0.0, 1.0, samples);
    for (Index n = 0; n < samples; ++n) {
      times.push_back(t(n));
      const VectorXd y = f(t(n));
      for (std::size_t d = 0; d < rows.size(); ++d) rows[d].push_back(y(static_cast<Index>(d)));
    }
  }

  TrajectoryDataset finish(double noise, std::uint64_t seed) const {
    TrajectoryDataset data;
    const Index n = static_cast<Index>(times.size());
    data.times = Eigen::Map<const VectorXd>(times.data(), n);
    data.targets.resize(static_cast<Index>(rows.size()), n);
    UniformSource rng(seed);
    for (Index i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < rows.size(); ++d) {
        double y = rows[d][static_cast<std::size_t>(i)];
        if (noise > 0.0) y += noise * (2.0 * rng.next() - 1.0);
        data.targets(static_cast<Index>(d), i) = y;
      }
    }
    return data;
  }
};

SyntheticTask toy(double noise, std::uint64_t seed) {
  SyntheticTask task;
  task.task = Task::kToy1d;
  Builder b(1);
  b.demo(3500, [](double t) { return vec({0.46 - 0.35 * t + 0.2 * std::sin(2.5 * kPi * t) * std::exp(-t)}); });
  task.data = b.finish(noise, seed);
  task.training.push_back(endpoint_constraints(1, vec({0.46}), vec({0.31})));
  task.config.network.hidden = {eql_block(1), eql_block(1)};
  task.config.network.basis_count = 5;
  task.config.beta = 5;
  task.config.epochs = 500;
  task.config.learning_rate = 3e-3;
  task.config.lambda = 0.01;
  task.config.init_ranges = {{{-3, 3}, {-1, 1}}, {{-3, 3}, {-1, 1}}, {{-1, 1}, {-1, 1}}};
  return task;
}

SyntheticTask letter(double noise, std::uint64_t seed) {
  SyntheticTask task;
  task.task = Task::kLetter2d;
  Builder b(2);
  for (int i = 0; i < 8; ++i) {
    const double di = i;
    const double x0 = 43.1 + 0.25 * std::sin(1.7 * di), y0 = -1.2 + 0.25 * std::cos(1.3 * di);
    const double x1 = 33.4 + 0.25 * std::sin(0.9 * di + 1.0), y1 = 3.8 + 0.25 * std::cos(2.1 * di);
    const double amp = 1.0 + 0.02 * std::sin(2.3 * di);
    const double warp = 0.01 * std::sin(di + 0.5);
    b.demo(1000, [=](double t) {
      const double u = t + warp * std::sin(kPi * t);
      const double x = lerp(x0, x1, u) + amp * 6.0 * std::sin(2.0 * kPi * u);
      const double y = lerp(y0, y1, u) + amp * (5.0 * (1.0 - std::cos(2.0 * kPi * u)) - 2.0 * std::sin(4.0 * kPi * u));
      return vec({x, y});
    });
  }
  task.data = b.finish(noise, seed);
  task.training = {
      endpoint_constraints(1, vec({46.0, 0.0}), vec({30.0, 4.0})),
      endpoint_constraints(2, vec({42.0, -4.0}), vec({35.0, 2.0})),
      endpoint_constraints(3, vec({44.0, -3.0}), vec({33.0, 7.0})),
      endpoint_constraints(4, vec({43.1, -1.2}), vec({33.4, 3.8})),
  };
  task.held_out = {letter_unseen_endpoints()};
  task.config.network.hidden = {eql_block(2)};
  task.config.network.basis_count = 7;
  task.config.beta = 10;
  task.config.epochs = 25000;
  task.config.learning_rate = 0.01;
  task.config.lambda = 0.01;
  task.config.init_ranges = {{{-10, 10}, {-1, 1}}, {{-1, 1}, {-1, 1}}};
  return task;
}

SyntheticTask cleaning(double noise, std::uint64_t seed) {
  SyntheticTask task;
  task.task = Task::kCleaning3d;
  Builder b(3);
  for (int i = 0; i < 4; ++i) {
    const double phase = 0.3 * i;
    const double amp = 1.0 + 0.05 * std::sin(1.1 * i + 0.2);
    b.demo(500, [=](double t) {
      const double plateau = t < 0.2 ? smooth(t / 0.2) : (t > 0.8 ? smooth((1.0 - t) / 0.2) : 1.0);
      const double x = 0.46 - amp * 0.08 * bump(t) + 0.03 * std::sin(6.0 * kPi * t) * bump(t);
      const double y = amp * 0.15 * bump(t) * std::sin(2.0 * kPi * t + phase);
      const double z = lerp(0.09, 0.16, plateau);
      return vec({x, y, z});
    });
  }
  task.data = b.finish(noise, seed);
  const VectorXd home = vec({0.46, 0.0, 0.09});
  const VectorXd contact = linspace(0.2, 0.8, 16);
  const std::array<double, 4> heights{0.16, 0.21, 0.26, 0.30};
  for (int r = 1; r <= 4; ++r) {
    ConstraintSet cs = endpoint_constraints(r, home, home);
    for (Index k = 0; k < contact.size(); ++k) cs.equalities.push_back({contact(k), 2, heights[r - 1]});
    task.training.push_back(cs);
  }
  task.config.network.hidden = {eql_block(3), eql_block(3)};
  task.config.network.basis_count = 19;
  task.config.beta = 25;
  task.config.epochs = 2000;
  task.config.learning_rate = 0.01;
  task.config.lambda = 0.01;
  task.config.init_ranges = {{{-5, 5}, {-1, 1}}, {{-2, 2}, {-1, 1}}, {{-1, 1}, {-1, 1}}};
  return task;
}

ConstraintSet assembly_set(int r, const VectorXd& start, double x, double y) {
  ConstraintSet cs = endpoint_constraints(r, start, vec({x, y, 0.42}));
  for (int j = 0; j < 8; ++j) {
    const double t = 0.7 + 0.3 * j / 8.0;
    cs.equalities.push_back({t, 0, x});
    cs.equalities.push_back({t, 1, y});
  }
  return cs;
}

SyntheticTask assembly(double noise, std::uint64_t seed) {
  SyntheticTask task;
  task.task = Task::kAssembly3d;
  Builder b(3);
  const std::array<VectorXd, 2> starts{vec({0.50, 0.14, 0.12}), vec({0.42, 0.15, 0.12})};
  const std::array<VectorXd, 2> goals{vec({0.33, -0.37, 0.42}), vec({0.39, -0.43, 0.42})};
  for (int i = 0; i < 2; ++i) {
    const VectorXd s = starts[i], g = goals[i];
    b.demo(500, [=](double t) {
      const double reach = smooth(t / 0.7);
      return vec({lerp(s(0), g(0), reach), lerp(s(1), g(1), reach), lerp(s(2), g(2), smooth(t)) + 0.12 * bump(t)});
    });
  }
  task.data = b.finish(noise, seed);
  task.training = {
      assembly_set(1, vec({0.50, 0.14, 0.12}), 0.33, -0.37),
      assembly_set(2, vec({0.42, 0.15, 0.12}), 0.39, -0.43),
      assembly_set(3, vec({0.42, 0.11, 0.12}), 0.40, -0.32),
      assembly_set(4, vec({0.46, 0.07, 0.12}), 0.24, -0.45),
  };
  task.held_out = {assembly_set(5, vec({0.45, 0.13, 0.12}), 0.25, -0.28)};
  task.config.network.hidden = {eql_block(2), eql_block(2), eql_block(2)};
  task.config.network.basis_count = 10;
  task.config.beta = 10;
  task.config.epochs = 4000;
  task.config.learning_rate = 1e-3;
  task.config.lambda = 0.01;
  task.config.init_ranges = {{{-2, 2}, {-1, 1}}, {{-2, 2}, {-1, 1}}, {{-2, 2}, {-1, 1}}, {{-2, 2}, {-1, 1}}};
  return task;
}

ConstraintSet pickplace_set(int r, const VectorXd& pick, const VectorXd& place) {
  ConstraintSet cs = endpoint_constraints(r, pick, place);
  const VectorXd window = pickplace_window_times();
  for (Index k = 0; k < window.size(); ++k) cs.inequalities.push_back({window(k), 0, 0.55, kInf});
  for (Index k = 0; k < window.size(); ++k) cs.inequalities.push_back({window(k), 2, 0.6, kInf});
  return cs;
}

SyntheticTask pickplace(double noise, std::uint64_t seed) {
  SyntheticTask task;
  task.task = Task::kPickPlace3d;
  Builder b(3);
  const std::array<VectorXd, 2> picks{vec({0.26, 0.35, 0.21}), vec({0.31, 0.33, 0.21})};
  const std::array<VectorXd, 2> places{vec({0.31, -0.43, 0.13}), vec({0.31, -0.53, 0.13})};
  for (int i = 0; i < 2; ++i) {
    const VectorXd p = picks[i], q = places[i];
    b.demo(kPickPlaceSamples, [=](double t) {
      return vec({lerp(p(0), q(0), t) + 0.38 * bump(t), lerp(p(1), q(1), smooth(t)), lerp(p(2), q(2), t) + 0.5 * bump(t)});
    });
  }
  task.data = b.finish(noise, seed);
  task.training = {
      pickplace_set(1, vec({0.40, 0.40, 0.21}), vec({0.31, -0.34, 0.13})),
      pickplace_set(2, vec({0.26, 0.35, 0.21}), vec({0.31, -0.43, 0.13})),
      pickplace_set(3, vec({0.31, 0.33, 0.21}), vec({0.31, -0.53, 0.13})),
  };
  task.held_out = {pickplace_set(4, vec({0.35, 0.34, 0.21}), vec({0.31, -0.62, 0.13}))};
  task.config.network.hidden = {eql_block(2)};
  task.config.network.basis_count = 6;
  task.config.beta = 10;
  task.config.epochs = 4000;
  task.config.learning_rate = 1e-3;
  task.config.lambda = 0.001;
  task.config.init_ranges = {{{-3, 3}, {-3, 3}}, {{-3, 3}, {-1, 1}}};
  return task;
}

}  // namespace

VectorXd pickplace_window_times() {
  VectorXd t(80);
  for (Index j = 0; j < 80; ++j) t(j) = static_cast<double>(474 + 7 * j) / static_cast<double>(kPickPlaceSamples - 1);
  return t;
}

ConstraintSet letter_unseen_endpoints() { return endpoint_constraints(5, vec({45.0, -1.0}), vec({32.0, 3.0})); }

SyntheticTask generate_synthetic(Task task, double noise, std::uint64_t seed) {
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw Error(ErrorKind::kConfig, "noise level must be >= 0");
  SyntheticTask out;
  switch (task) {
    case Task::kToy1d:
      out = toy(noise, seed);
      break;
    case Task::kLetter2d:
      out = letter(noise, seed);
      break;
    case Task::kCleaning3d:
      out = cleaning(noise, seed);
      break;
    case Task::kAssembly3d:
      out = assembly(noise, seed);
      break;
    case Task::kPickPlace3d:
      out = pickplace(noise, seed);
      break;
  }
  out.config.seed = seed;
  return out;
}

}  // namespace ceqln
