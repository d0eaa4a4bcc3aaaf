#include "ceqln/fixed_basis.hpp"

#include <cmath>
#include <limits>

#include "ceqln/error.hpp"
#include "ceqln/parallel.hpp"

namespace ceqln {

std::string_view to_string(BasisFamily family) {
  switch (family) {
    case BasisFamily::kFourierToy:
      return "fourier";
    case BasisFamily::kGaussianToy:
      return "gaussian";
    case BasisFamily::kPolyTrig:
      return "poly_trig";
  }
  return "fourier";
}

BasisFamily basis_family_from_string(std::string_view name) {
  if (name == "fourier" || name == "fourier_toy") return BasisFamily::kFourierToy;
  if (name == "gaussian" || name == "gaussian_toy") return BasisFamily::kGaussianToy;
  if (name == "poly_trig") return BasisFamily::kPolyTrig;
  throw Error(ErrorKind::kConfig, "unknown basis family '" + std::string(name) + "'");
}

std::string_view to_string(CellStatus status) {
  switch (status) {
    case CellStatus::kFeasible:
      return "feasible";
    case CellStatus::kInfeasible:
      return "infeasible";
    case CellStatus::kIllConditioned:
      return "ill_conditioned";
  }
  return "feasible";
}

Index FixedBasisSpec::basis_count() const {
  switch (family) {
    case BasisFamily::kFourierToy:
      return 3;
    case BasisFamily::kGaussianToy:
      return 2;
    case BasisFamily::kPolyTrig:
      return 2 + 2 * static_cast<Index>(frequencies.size());
  }
  return 0;
}

void validate(const FixedBasisSpec& spec) {
  if (spec.family == BasisFamily::kGaussianToy && !(spec.theta1 > 0.0 && spec.theta2 > 0.0)) {
    throw Error(ErrorKind::kConfig, "gaussian basis widths must be positive");
  }
  if (spec.family == BasisFamily::kPolyTrig && spec.frequencies.empty()) {
    throw Error(ErrorKind::kConfig, "poly_trig basis needs at least one frequency");
  }
}

BasisEvaluations evaluate_fixed(const FixedBasisSpec& spec, const VectorXd& times) {
  validate(spec);
  BasisEvaluations out;
  out.times = times;
  out.values.resize(spec.basis_count(), times.size());
  for (Index n = 0; n < times.size(); ++n) {
    const double t = times(n);
    switch (spec.family) {
      case BasisFamily::kFourierToy:
        out.values(0, n) = t;
        out.values(1, n) = std::sin(spec.theta1 * t);
        out.values(2, n) = std::cos(spec.theta2 * t);
        break;
      case BasisFamily::kGaussianToy:
        out.values(0, n) = std::exp((0.25 - t * t) / (2.0 * spec.theta1));
        out.values(1, n) = std::exp((0.75 - t * t) / (2.0 * spec.theta2));
        break;
      case BasisFamily::kPolyTrig: {
        out.values(0, n) = t;
        out.values(1, n) = t * t;
        Index row = 2;
        for (double k : spec.frequencies) {
          out.values(row++, n) = std::sin(k * t);
          out.values(row++, n) = std::cos(k * t);
        }
        break;
      }
    }
  }
  return out;
}

DesignRowFn fixed_design_rows(const FixedBasisSpec& spec) {
  return [spec](const VectorXd& times) { return MatrixXd(assemble_design(evaluate_fixed(spec, times))); };
}

ConstraintFit fit_with_design(const DesignRowFn& design_at, const TrajectoryDataset& data, const ConstraintSet& cs,
                              const PipelineOptions& options) {
  validate(data);
  const DesignMatrix phi = design_at(data.times);
  const CostTerms cost = build_cost(phi, data.targets, options.lambda, options.mode);
  const Index dims = data.dims();
  ConstraintFit fit;
  fit.r = cs.r;
  try {
    fit.eq = assemble_equality(design_at, cs, dims, phi.cols());
    fit.ineq = assemble_inequality(design_at, cs, dims, phi.cols());
    fit.problem = make_problem(cost, fit.eq, fit.ineq);
    fit.solution = solve(fit.problem, options.qp);
  } catch (Error& e) {
    if (!e.constraint_set) e.constraint_set = cs.r;
    throw;
  }
  fit.fitted = fitted_trajectory(phi, fit.solution.w, dims);
  return fit;
}

std::vector<double> sweep_grid(BasisFamily family) {
  std::vector<double> grid;
  for (int k = 0; k < 10; ++k) {
    grid.push_back(family == BasisFamily::kGaussianToy ? 0.1 + 0.07 * k : 0.01 + 0.799 * k);
  }
  return grid;
}

std::vector<SweepCell> sweep(const TrajectoryDataset& data, const ConstraintSet& cs, BasisFamily family,
                             const SweepOptions& options) {
  if (family == BasisFamily::kPolyTrig) throw Error(ErrorKind::kConfig, "sweep supports the two toy families only");
  const std::vector<double> grid = sweep_grid(family);
  std::vector<SweepCell> cells(grid.size() * grid.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    SweepCell& cell = cells[i];
    cell.theta1 = grid[i / grid.size()];
    cell.theta2 = grid[i % grid.size()];
    cell.mse = std::numeric_limits<double>::quiet_NaN();
    FixedBasisSpec spec{family, cell.theta1, cell.theta2, {}};
    try {
      const ConstraintFit fit = fit_with_design(fixed_design_rows(spec), data, cs, options.pipeline);
      cell.condition = fit.solution.condition_estimate;
      cell.mse = (fit.fitted - data.targets).squaredNorm() / static_cast<double>(data.targets.size());
      cell.max_equality_residual = residuals(fit).max_equality;
      cell.status = cell.condition > options.condition_limit ? CellStatus::kIllConditioned : CellStatus::kFeasible;
      if (cell.status == CellStatus::kIllConditioned) {
        cell.detail = "condition estimate " + std::to_string(cell.condition) + " above limit";
      }
    } catch (const Error& e) {
      cell.detail = e.what();
      cell.condition = e.condition_estimate.value_or(std::numeric_limits<double>::infinity());
      switch (e.kind()) {
        case ErrorKind::kInfeasible:
        case ErrorKind::kRedundant:
          cell.status = CellStatus::kInfeasible;
          break;
        case ErrorKind::kIllConditioned:
        case ErrorKind::kNonConvergence:
        case ErrorKind::kNumerical:
          cell.status = CellStatus::kIllConditioned;
          break;
        default:
          throw;
      }
    }
  });
  return cells;
}

}  // namespace ceqln
