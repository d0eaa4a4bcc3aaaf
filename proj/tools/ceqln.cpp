// Command-line front end: train, adapt, sweep, export-equations,
// verify-appendix, metrics and generate.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ceqln/adaptation.hpp"
#include "ceqln/error.hpp"
#include "ceqln/fixed_basis.hpp"
#include "ceqln/io.hpp"
#include "ceqln/metrics.hpp"
#include "ceqln/symbolic.hpp"
#include "ceqln/synthetic.hpp"
#include "ceqln/training.hpp"

namespace fs = std::filesystem;
using namespace ceqln;

namespace {

struct Paths {
  std::string config;
  std::string dataset;
  std::string constraints;
  std::string model;
  std::string out;
};

// Tags errors raised while interpreting a file with that file's name.
template <typename F>
auto from_file(const std::string& path, F&& load) {
  try {
    return load(path);
  } catch (Error& e) {
    if (e.file.empty()) e.file = path;
    throw;
  }
}

std::vector<ConstraintSet> load_constraints(const std::string& path) {
  return from_file(path, [](const std::string& p) { return constraint_sets_from_json(read_json_file(p)); });
}

Model load_model(const std::string& path) {
  return from_file(path, [](const std::string& p) { return model_from_json(read_json_file(p)); });
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorKind::kConfig, std::string("missing required option ") + flag);
}

fs::path out_dir(const std::string& out) {
  require(out, "--out");
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    Error err(ErrorKind::kInput, "cannot create output directory '" + out + "': " + ec.message());
    err.file = out;
    throw err;
  }
  return dir;
}

std::string trajectory_name(int r) { return "trajectory_r" + std::to_string(r) + ".csv"; }

Json fit_summary(const ConstraintFit& fit, const TrajectoryDataset& data, const ConstraintSet& cs) {
  const ConstraintResiduals res = residuals(fit);
  Json j;
  j["r"] = fit.r;
  j["mse_shape"] = format_double(mse_shape(fit.fitted, data.targets));
  j["mse_const"] = format_double(mse_const(fit.fitted, data.times, cs));
  j["max_equality_residual"] = format_double(res.max_equality);
  j["max_inequality_violation"] = format_double(res.max_inequality_violation);
  j["active_rows"] = fit.solution.active.size();
  j["condition_estimate"] = format_double(fit.solution.condition_estimate);
  j["warnings"] = fit.solution.warnings;
  return j;
}

int cmd_train(const Paths& p, std::optional<std::uint64_t> seed, const std::string& cost_mode, bool fd_fallback,
              int epochs) {
  require(p.config, "--config");
  require(p.dataset, "--dataset");
  require(p.constraints, "--constraints");
  TrainingConfig config =
      from_file(p.config, [](const std::string& f) { return training_config_from_json(read_json_file(f)); });
  if (seed) config.seed = *seed;
  if (!cost_mode.empty()) config.cost_mode = cost_mode_from_string(cost_mode);
  if (fd_fallback) config.fd_fallback = true;
  if (epochs > 0) config.epochs = epochs;
  const TrajectoryDataset data = read_dataset_csv(p.dataset);
  const std::vector<ConstraintSet> sets = load_constraints(p.constraints);
  const fs::path dir = out_dir(p.out);

  const FitResult fit = train(config, data, sets);

  std::ostringstream loss;
  loss << "epoch,loss,best_loss,constraint_mse,inequality_violation\n";
  for (std::size_t e = 0; e < fit.loss_history.size(); ++e) {
    loss << e << ',' << format_double(fit.loss_history[e]) << ',' << format_double(fit.best_loss_history[e]) << ','
         << format_double(fit.constraint_mse[e]) << ',' << format_double(fit.inequality_violation[e]) << '\n';
  }
  write_text_file((dir / "loss.csv").string(), loss.str());

  const Model model{config.network, fit.params, config.lambda, config.cost_mode};
  const std::string model_path = p.model.empty() ? (dir / "model.json").string() : p.model;
  write_text_file(model_path, model_to_json(model).dump(2) + "\n");

  Json metrics;
  metrics["best_loss"] = format_double(fit.best_loss);
  metrics["best_epoch"] = fit.best_epoch;
  metrics["initial_loss"] = format_double(fit.loss_history.empty() ? fit.best_loss : fit.loss_history.front());
  metrics["fd_epochs"] = fit.fd_epochs;
  Json draws = Json::array();
  for (double l : fit.initialization.draw_losses) draws.push_back(format_double(l));
  metrics["initialization"] = {{"draw_losses", draws}, {"selected", fit.initialization.selected}};
  Json per_set = Json::array();
  for (std::size_t i = 0; i < fit.fits.size(); ++i) {
    write_text_file((dir / trajectory_name(fit.fits[i].r)).string(), trajectory_to_csv(data.times, fit.fits[i].fitted));
    per_set.push_back(fit_summary(fit.fits[i], data, sets[i]));
  }
  metrics["sets"] = per_set;
  write_text_file((dir / "metrics.json").string(), metrics.dump(2) + "\n");
  std::cout << "trained " << fit.loss_history.size() << " epochs, best loss " << format_double(fit.best_loss)
            << " at epoch " << fit.best_epoch << "\n";
  return 0;
}

int cmd_adapt(const Paths& p, double tolerance) {
  require(p.model, "--model");
  require(p.dataset, "--dataset");
  require(p.constraints, "--constraints");
  const Model model = load_model(p.model);
  const TrajectoryDataset data = read_dataset_csv(p.dataset);
  const std::vector<ConstraintSet> sets = load_constraints(p.constraints);
  const fs::path dir = out_dir(p.out);
  const Adapter adapter(model.params, model.spec, data, {model.lambda, model.cost_mode, {}});
  Json report = Json::array();
  bool pass = true;
  for (const ConstraintSet& cs : sets) {
    const ConstraintFit fit = adapter.adapt(cs);
    write_text_file((dir / trajectory_name(cs.r)).string(), trajectory_to_csv(data.times, fit.fitted));
    const ConstraintReport rep = constraint_report(fit, tolerance);
    Json rows = Json::array();
    for (const RowResidual& row : rep.rows) {
      rows.push_back({{"kind", row.equality ? "equality" : "inequality"},
                      {"t", format_double(row.t)},
                      {"dim", row.dim},
                      {"lower", format_double(row.lower)},
                      {"upper", format_double(row.upper)},
                      {"value", format_double(row.value)},
                      {"residual", format_double(row.residual)},
                      {"pass", row.pass}});
    }
    report.push_back({{"r", cs.r}, {"pass", rep.pass}, {"max_residual", format_double(rep.max_residual)}, {"rows", rows}});
    std::cout << "r=" << cs.r << " max residual " << format_double(rep.max_residual) << (rep.pass ? " pass" : " FAIL")
              << "\n";
    pass = pass && rep.pass;
  }
  write_text_file((dir / "residuals.json").string(),
                  Json{{"tolerance", format_double(tolerance)}, {"pass", pass}, {"sets", report}}.dump(2) + "\n");
  return pass ? 0 : 4;
}

int cmd_sweep(const Paths& p, const std::string& family_name, double lambda) {
  const BasisFamily family = basis_family_from_string(family_name);
  TrajectoryDataset data;
  ConstraintSet cs;
  if (p.dataset.empty()) {
    const SyntheticTask toy = generate_synthetic(Task::kToy1d, 0.0, 0);
    data = toy.data;
    cs = toy.training.front();
  } else {
    data = read_dataset_csv(p.dataset);
    require(p.constraints, "--constraints");
    cs = load_constraints(p.constraints).front();
  }
  SweepOptions options;
  options.pipeline.lambda = lambda;
  const std::vector<SweepCell> cells = sweep(data, cs, family, options);
  std::ostringstream csv;
  csv << "theta1,theta2,mse,status,condition,max_equality_residual\n";
  int flagged = 0;
  for (const SweepCell& c : cells) {
    csv << format_double(c.theta1) << ',' << format_double(c.theta2) << ',' << format_double(c.mse) << ','
        << to_string(c.status) << ',' << format_double(c.condition) << ',' << format_double(c.max_equality_residual)
        << '\n';
    if (c.status != CellStatus::kFeasible) ++flagged;
  }
  if (p.out.empty()) {
    std::cout << csv.str();
  } else {
    write_text_file(p.out, csv.str());
    std::cout << cells.size() << " cells, " << flagged << " flagged\n";
  }
  return 0;
}

int cmd_export(const Paths& p, int digits) {
  require(p.model, "--model");
  const Model model = load_model(p.model);
  std::ostringstream os;
  for (const std::string& line : export_expressions(model.params, model.spec, digits)) os << line << "\n";
  if (p.out.empty()) {
    std::cout << os.str();
  } else {
    write_text_file(p.out, os.str());
  }
  return 0;
}

int cmd_verify_appendix(const std::string& fixture_path, double tolerance) {
  const AppendixFixture fx =
      fixture_path.empty() ? appendix_fixture()
                           : from_file(fixture_path, [](const std::string& f) { return load_appendix_fixture(read_text_file(f)); });
  const ConstraintReport rep = verify_constraints(fx.params, fx.spec, fx.w, fx.constraints, fx.dims, tolerance);
  for (const RowResidual& row : rep.rows) {
    std::printf("t=%g dim=%ld target=%g value=%.6f residual=%.6f %s\n", row.t, static_cast<long>(row.dim), row.lower,
                row.value, row.residual, row.pass ? "pass" : "FAIL");
  }
  std::printf("max residual %.6f (tolerance %g): %s\n", rep.max_residual, tolerance, rep.pass ? "pass" : "FAIL");
  return rep.pass ? 0 : 4;
}

int cmd_metrics(const Paths& p, const std::vector<std::string>& trajectories) {
  require(p.dataset, "--dataset");
  require(p.constraints, "--constraints");
  if (trajectories.empty()) throw Error(ErrorKind::kConfig, "missing required option --trajectory");
  const TrajectoryDataset data = read_dataset_csv(p.dataset);
  const std::vector<ConstraintSet> sets = load_constraints(p.constraints);
  if (sets.size() != trajectories.size()) {
    throw Error(ErrorKind::kConfig, "metrics: " + std::to_string(trajectories.size()) + " trajectories for " +
                                        std::to_string(sets.size()) + " constraint sets");
  }
  std::vector<MatrixXd> fitted;
  std::vector<VectorXd> goals;
  Json per_set = Json::array();
  double shape = 0.0, constraint = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const TrajectoryDataset traj = read_dataset_csv(trajectories[i]);
    if (traj.size() != data.size() || traj.dims() != data.dims()) {
      Error err(ErrorKind::kConfig, "trajectory does not match the dataset shape");
      err.file = trajectories[i];
      throw err;
    }
    fitted.push_back(traj.targets);
    VectorXd goal = traj.targets.col(traj.size() - 1);
    for (const EqualityRow& row : sets[i].equalities) {
      if (row.t == 1.0 && row.dim < goal.size()) goal(row.dim) = row.value;
    }
    goals.push_back(goal);
    const double s = mse_shape(traj.targets, data.targets);
    const double c = mse_const(traj.targets, data.times, sets[i]);
    shape += s / static_cast<double>(sets.size());
    constraint += c / static_cast<double>(sets.size());
    per_set.push_back({{"r", sets[i].r}, {"mse_shape", format_double(s)}, {"mse_const", format_double(c)}});
  }
  Json out;
  out["mse_shape"] = format_double(shape);
  out["mse_const"] = format_double(constraint);
  if (data.dims() >= 3) {
    const PickPlaceMetrics m = mse_suite_pickplace(fitted, data, pickplace_window_times(), goals);
    out["mse1"] = format_double(m.mse1);
    out["mse1_sum"] = format_double(m.mse1_sum);
    out["mse2"] = format_double(m.mse2);
    out["mse3"] = format_double(m.mse3);
    out["mse4"] = format_double(m.mse4);
  }
  out["sets"] = per_set;
  const std::string text = out.dump(2) + "\n";
  if (p.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(p.out, text);
  }
  return 0;
}

int cmd_generate(const Paths& p, const std::string& task_name, double noise, std::uint64_t seed) {
  const SyntheticTask task = generate_synthetic(task_from_string(task_name), noise, seed);
  const fs::path dir = out_dir(p.out);
  write_text_file((dir / "dataset.csv").string(), trajectory_to_csv(task.data.times, task.data.targets));
  write_text_file((dir / "constraints.json").string(), constraint_sets_to_json(task.training).dump(2) + "\n");
  if (!task.held_out.empty()) {
    write_text_file((dir / "heldout.json").string(), constraint_sets_to_json(task.held_out).dump(2) + "\n");
  }
  write_text_file((dir / "config.json").string(), training_config_to_json(task.config).dump(2) + "\n");
  std::cout << to_string(task.task) << ": " << task.data.size() << " samples, " << task.training.size()
            << " training sets, " << task.held_out.size() << " held-out sets\n";
  return 0;
}

void report(const Error& e) {
  Json j;
  j["kind"] = std::string(to_string(e.kind()));
  j["message"] = e.what();
  j["exit_code"] = exit_code(e.kind());
  if (!e.file.empty()) j["file"] = e.file;
  if (!e.field.empty()) j["field"] = e.field;
  if (e.byte_offset) j["byte_offset"] = *e.byte_offset;
  if (e.constraint_set) j["constraint_set"] = *e.constraint_set;
  if (e.epoch) j["epoch"] = *e.epoch;
  if (e.condition_estimate) j["condition_estimate"] = format_double(*e.condition_estimate);
  std::cerr << Json{{"error", j}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained equation-learner trajectory regression"};
  app.require_subcommand(1);
  Paths paths;
  std::optional<std::uint64_t> seed;
  std::string cost_mode;
  bool fd_fallback = false;
  int epochs = 0;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", paths.config, "Training config JSON");
    sub->add_option("--dataset", paths.dataset, "Dataset CSV (t,y0,...)");
    sub->add_option("--constraints", paths.constraints, "Constraint sets JSON");
    sub->add_option("--model", paths.model, "Model JSON");
    sub->add_option("--out", paths.out, "Output file or directory");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "Train a network and write model, loss and trajectories");
  common(train_cmd);
  train_cmd->add_option("--seed", seed, "Override the config seed");
  train_cmd->add_option("--cost-mode", cost_mode, "paper or direct")->check(CLI::IsMember({"paper", "direct"}));
  train_cmd->add_flag("--fd-fallback", fd_fallback, "Use finite differences when the adjoint is degenerate");
  train_cmd->add_option("--epochs", epochs, "Override the config epoch count");

  double tolerance = 1e-8;
  CLI::App* adapt_cmd = app.add_subcommand("adapt", "Re-solve a trained model for new constraint sets");
  common(adapt_cmd);
  adapt_cmd->add_option("--tolerance", tolerance, "Residual tolerance for the report");

  std::string family = "fourier";
  double lambda = 0.01;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Fixed-basis parameter sweep on the 10 x 10 grid");
  common(sweep_cmd);
  sweep_cmd->add_option("--family", family, "fourier or gaussian");
  sweep_cmd->add_option("--lambda", lambda, "Weight regularization");

  int digits = 3;
  CLI::App* export_cmd = app.add_subcommand("export-equations", "Print the learned basis as expressions");
  common(export_cmd);
  export_cmd->add_option("--digits", digits, "Decimal places");

  std::string fixture;
  double appendix_tol = 1.0;
  CLI::App* verify_cmd = app.add_subcommand("verify-appendix", "Check the reference letter network against its constraints");
  verify_cmd->add_option("--fixture", fixture, "Fixture JSON (defaults to the built-in copy)");
  verify_cmd->add_option("--tolerance", appendix_tol, "Per-coordinate tolerance");

  std::vector<std::string> trajectories;
  CLI::App* metrics_cmd = app.add_subcommand("metrics", "Shape, constraint and pick-and-place metrics");
  common(metrics_cmd);
  metrics_cmd->add_option("--trajectory", trajectories, "Trajectory CSV, one per constraint set");

  std::string task = "toy1d";
  double noise = 0.0;
  std::uint64_t gen_seed = 0;
  CLI::App* gen_cmd = app.add_subcommand("generate", "Write a synthetic dataset, constraints and config");
  common(gen_cmd);
  gen_cmd->add_option("--task", task, "toy1d, letter2d, cleaning3d, assembly3d or pickplace3d");
  gen_cmd->add_option("--noise", noise, "Half-width of uniform target noise");
  gen_cmd->add_option("--seed", gen_seed, "Noise seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    Error err(ErrorKind::kConfig, e.what());
    report(err);
    return exit_code(err.kind());
  }

  try {
    if (*train_cmd) return cmd_train(paths, seed, cost_mode, fd_fallback, epochs);
    if (*adapt_cmd) return cmd_adapt(paths, tolerance);
    if (*sweep_cmd) return cmd_sweep(paths, family, lambda);
    if (*export_cmd) return cmd_export(paths, digits);
    if (*verify_cmd) return cmd_verify_appendix(fixture, appendix_tol);
    if (*metrics_cmd) return cmd_metrics(paths, trajectories);
    if (*gen_cmd) return cmd_generate(paths, task, noise, gen_seed);
  } catch (const Error& e) {
    report(e);
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    report(Error(ErrorKind::kNumerical, e.what()));
    return 4;
  }
  return 0;
}
