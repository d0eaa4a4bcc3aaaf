#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ceqln/adaptation.hpp"
#include "ceqln/error.hpp"
#include "ceqln/io.hpp"
#include "ceqln/symbolic.hpp"
#include "ceqln/synthetic.hpp"
#include "ceqln/training.hpp"

namespace py = pybind11;
using namespace ceqln;

namespace {

// Structured values cross the boundary as JSON text in the same formats the
// command line tool reads and writes.
Json parse(const std::string& text) { return parse_json(text, "<python>"); }

TrajectoryDataset dataset(const VectorXd& times, const MatrixXd& targets) {
  if (targets.cols() != times.size()) throw Error(ErrorKind::kConfig, "targets must have one column per time");
  TrajectoryDataset d;
  d.times = times;
  d.targets = targets;
  return d;
}

py::dict fit_dict(const ConstraintFit& fit) {
  py::dict out;
  out["r"] = fit.r;
  out["w"] = fit.solution.w;
  out["fitted"] = fit.fitted;
  out["objective"] = fit.solution.objective;
  const ConstraintResiduals res = residuals(fit);
  out["max_equality_residual"] = res.max_equality;
  out["max_inequality_violation"] = res.max_inequality_violation;
  return out;
}

py::dict generate(const std::string& task, double noise, std::uint64_t seed) {
  const SyntheticTask t = generate_synthetic(task_from_string(task), noise, seed);
  py::dict out;
  out["times"] = t.data.times;
  out["targets"] = t.data.targets;
  out["training"] = constraint_sets_to_json(t.training).dump();
  out["held_out"] = constraint_sets_to_json(t.held_out).dump();
  out["config"] = training_config_to_json(t.config).dump();
  return out;
}

py::dict train_model(const std::string& config, const VectorXd& times, const MatrixXd& targets,
                     const std::string& constraints) {
  const TrainingConfig c = training_config_from_json(parse(config));
  const std::vector<ConstraintSet> sets = constraint_sets_from_json(parse(constraints));
  FitResult fit;
  {
    py::gil_scoped_release release;
    fit = train(c, dataset(times, targets), sets);
  }
  py::dict out;
  out["loss_history"] = fit.loss_history;
  out["best_loss_history"] = fit.best_loss_history;
  out["constraint_mse"] = fit.constraint_mse;
  out["best_epoch"] = fit.best_epoch;
  out["best_loss"] = fit.best_loss;
  out["model"] = model_to_json(Model{c.network, fit.params, c.lambda, c.cost_mode}).dump();
  py::list fits;
  for (const ConstraintFit& f : fit.fits) fits.append(fit_dict(f));
  out["fits"] = fits;
  return out;
}

py::list adapt_model(const std::string& model, const VectorXd& times, const MatrixXd& targets,
                     const std::string& constraints) {
  const Model m = model_from_json(parse(model));
  const Adapter adapter(m.params, m.spec, dataset(times, targets), {m.lambda, m.cost_mode, {}});
  py::list out;
  for (const ConstraintSet& cs : constraint_sets_from_json(parse(constraints))) out.append(fit_dict(adapter.adapt(cs)));
  return out;
}

std::vector<std::string> export_model(const std::string& model, int digits) {
  const Model m = model_from_json(parse(model));
  return export_expressions(m.params, m.spec, digits);
}

py::dict solve_qp(const MatrixXd& P, const VectorXd& q, const MatrixXd& A_eq, const VectorXd& b_eq,
                  const MatrixXd& A_ineq, const VectorXd& lower, const VectorXd& upper) {
  QpProblem qp{P, q, A_eq, b_eq, A_ineq, lower, upper};
  const QpSolution sol = solve(qp);
  py::dict out;
  out["w"] = sol.w;
  out["objective"] = sol.objective;
  out["eq_multipliers"] = sol.eq_multipliers;
  py::list active;
  for (const ActiveRow& row : sol.active) active.append(py::make_tuple(row.row, row.multiplier));
  out["active"] = active;
  return out;
}

double appendix_residual() {
  const AppendixFixture fx = appendix_fixture();
  return verify_constraints(fx.params, fx.spec, fx.w, fx.constraints, fx.dims, 1.0).max_residual;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  static py::exception<Error> error_type(m, "CeqlnError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object type = error_type;
      py::object exc = type(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      exc.attr("exit_code") = exit_code(e.kind());
      exc.attr("constraint_set") = e.constraint_set ? py::cast(*e.constraint_set) : py::none();
      exc.attr("epoch") = e.epoch ? py::cast(*e.epoch) : py::none();
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  m.def("generate", &generate, py::arg("task"), py::arg("noise") = 0.0, py::arg("seed") = 0);
  m.def("train", &train_model, py::arg("config"), py::arg("times"), py::arg("targets"), py::arg("constraints"));
  m.def("adapt", &adapt_model, py::arg("model"), py::arg("times"), py::arg("targets"), py::arg("constraints"));
  m.def("export_equations", &export_model, py::arg("model"), py::arg("digits") = 4);
  m.def("solve_qp", &solve_qp, py::arg("P"), py::arg("q"), py::arg("A_eq"), py::arg("b_eq"), py::arg("A_ineq"),
        py::arg("lower"), py::arg("upper"));
  m.def("appendix_residual", &appendix_residual);
}
