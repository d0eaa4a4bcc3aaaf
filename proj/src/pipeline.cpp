#include "ceqln/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ceqln/error.hpp"
#include "ceqln/parallel.hpp"
#include "ceqln/qp_adjoint.hpp"

namespace ceqln {

namespace {

bool is_solver_failure(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInfeasible:
    case ErrorKind::kRedundant:
    case ErrorKind::kIllConditioned:
    case ErrorKind::kNonConvergence:
    case ErrorKind::kNumerical:
      return true;
    default:
      return false;
  }
}

MatrixXd design_rows(const NetworkParams& params, const NetworkSpec& spec, const VectorXd& times,
                     NetworkPullback* pullback) {
  if (times.size() == 0) return MatrixXd(0, spec.basis_count + 1);
  if (pullback == nullptr) return assemble_design(forward(params, spec, times));
  auto [basis, pb] = forward_with_gradients(params, spec, times);
  *pullback = std::move(pb);
  return assemble_design(basis);
}

ConstraintFit fit_impl(const DataTerms& terms, const NetworkParams& params, const NetworkSpec& spec,
                       const ConstraintSet& cs, const PipelineOptions& options, NetworkPullback* eq_pullback,
                       NetworkPullback* ineq_pullback) {
  const Index dims = terms.targets.rows();
  ConstraintFit fit;
  fit.r = cs.r;
  try {
    const VectorXd eq_times = equality_times(deduplicated_equalities(cs));
    fit.eq = assemble_equality(design_rows(params, spec, eq_times, eq_pullback), cs, dims);
    fit.ineq = assemble_inequality(design_rows(params, spec, inequality_times(cs), ineq_pullback), cs, dims);
    fit.problem = make_problem(terms.cost, fit.eq, fit.ineq);
    fit.solution = solve(fit.problem, options.qp);
  } catch (Error& e) {
    if (!e.constraint_set) e.constraint_set = cs.r;
    throw;
  }
  fit.fitted = fitted_trajectory(terms.phi, fit.solution.w, dims);
  return fit;
}

}  // namespace

DataTerms data_terms(const NetworkParams& params, const NetworkSpec& spec, const TrajectoryDataset& data,
                     const PipelineOptions& options) {
  validate(data);
  DataTerms terms;
  terms.phi = assemble_design(forward(params, spec, data.times));
  terms.cost = build_cost(terms.phi, data.targets, options.lambda, options.mode);
  terms.targets = data.targets;
  return terms;
}

MatrixXd weight_rows(const VectorXd& w, Index dims) {
  const Index m = w.size() / dims;
  return w.reshaped(m, dims).transpose();
}

MatrixXd fitted_trajectory(const DesignMatrix& phi, const VectorXd& w, Index dims) {
  return weight_rows(w, dims) * phi.transpose();
}

ConstraintFit fit_constraint_set(const DataTerms& terms, const NetworkParams& params, const NetworkSpec& spec,
                                 const ConstraintSet& cs, const PipelineOptions& options) {
  return fit_impl(terms, params, spec, cs, options, nullptr, nullptr);
}

ConstraintFit evaluate(const NetworkParams& params, const NetworkSpec& spec, const TrajectoryDataset& data,
                       const ConstraintSet& cs, const PipelineOptions& options) {
  return fit_constraint_set(data_terms(params, spec, data, options), params, spec, cs, options);
}

double half_sse(const MatrixXd& fitted, const MatrixXd& targets) {
  if (fitted.rows() != targets.rows() || fitted.cols() != targets.cols()) {
    throw Error(ErrorKind::kConfig, "half_sse: shape mismatch");
  }
  return 0.5 * (fitted - targets).squaredNorm();
}

ConstraintResiduals residuals(const ConstraintFit& fit) {
  ConstraintResiduals out;
  const VectorXd& w = fit.solution.w;
  if (fit.eq.rows() > 0) {
    const VectorXd err = fit.eq.A * w - fit.eq.values;
    out.max_equality = err.cwiseAbs().maxCoeff();
    out.mean_square_equality = err.squaredNorm() / static_cast<double>(err.size());
  }
  if (fit.ineq.rows() > 0) {
    const VectorXd v = fit.ineq.A * w;
    for (Index i = 0; i < v.size(); ++i) {
      out.max_inequality_violation =
          std::max({out.max_inequality_violation, fit.ineq.lower(i) - v(i), v(i) - fit.ineq.upper(i)});
    }
  }
  return out;
}

LossReport total_loss(const NetworkParams& params, const NetworkSpec& spec, const TrajectoryDataset& data,
                      const std::vector<ConstraintSet>& sets, const PipelineOptions& options) {
  LossReport report;
  DataTerms terms;
  try {
    terms = data_terms(params, spec, data, options);
  } catch (const Error& e) {
    if (!is_solver_failure(e.kind())) throw;
    report.loss = std::numeric_limits<double>::infinity();
    report.failure = e.what();
    return report;
  }
  std::vector<double> losses(sets.size(), 0.0);
  std::vector<std::string> failures(sets.size());
  std::vector<char> failed(sets.size(), 0);
  parallel_for(sets.size(), [&](std::size_t i) {
    try {
      const ConstraintFit fit = fit_constraint_set(terms, params, spec, sets[i], options);
      losses[i] = half_sse(fit.fitted, terms.targets);
    } catch (const Error& e) {
      if (!is_solver_failure(e.kind())) throw;
      failed[i] = 1;
      failures[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (failed[i]) {
      report.loss = std::numeric_limits<double>::infinity();
      report.failed_r = sets[i].r;
      report.failure = failures[i];
      return report;
    }
    report.loss += losses[i];
  }
  return report;
}

namespace {

GradientReport adjoint_gradient(const NetworkParams& params, const NetworkSpec& spec, const TrajectoryDataset& data,
                                const std::vector<ConstraintSet>& sets, const PipelineOptions& options) {
  validate(data);
  auto [basis, data_pullback] = forward_with_gradients(params, spec, data.times);
  DataTerms terms;
  terms.phi = assemble_design(basis);
  terms.cost = build_cost(terms.phi, data.targets, options.lambda, options.mode);
  terms.targets = data.targets;
  const Index dims = data.dims();
  const Index m = terms.phi.cols();

  struct PerSet {
    ConstraintFit fit;
    double loss = 0.0;
    MatrixXd bar_phi;
    VectorXd theta_grad;
    std::vector<std::string> warnings;
  };
  std::vector<PerSet> parts(sets.size());
  parallel_for(sets.size(), [&](std::size_t i) {
    PerSet& part = parts[i];
    NetworkPullback eq_pb, ineq_pb;
    part.fit = fit_impl(terms, params, spec, sets[i], options, &eq_pb, &ineq_pb);
    const MatrixXd residual = part.fit.fitted - terms.targets;  // D x N
    part.loss = 0.5 * residual.squaredNorm();
    const MatrixXd w_rows = weight_rows(part.fit.solution.w, dims);
    VectorXd dL_dw(dims * m);
    for (Index d = 0; d < dims; ++d) dL_dw.segment(d * m, m) = terms.phi.transpose() * residual.row(d).transpose();
    part.bar_phi = residual.transpose() * w_rows;
    const QpCotangents bar = solution_pullback(part.fit.problem, part.fit.solution, dL_dw, options.qp);
    part.warnings = bar.warnings;
    const DesignCotangents rows = chain_to_design(bar, terms.phi, terms.targets, terms.cost, part.fit.eq,
                                                  part.fit.ineq);
    part.bar_phi += rows.data;
    part.theta_grad = VectorXd::Zero(params.parameter_count());
    if (rows.equality.rows() > 0) part.theta_grad += eq_pb(strip_ones_column(rows.equality)).flatten();
    if (rows.inequality.rows() > 0) part.theta_grad += ineq_pb(strip_ones_column(rows.inequality)).flatten();
  });
  GradientReport report;
  MatrixXd bar_phi = MatrixXd::Zero(terms.phi.rows(), m);
  VectorXd theta_grad = VectorXd::Zero(params.parameter_count());
  for (PerSet& part : parts) {
    report.loss += part.loss;
    bar_phi += part.bar_phi;
    theta_grad += part.theta_grad;
    report.warnings.insert(report.warnings.end(), part.warnings.begin(), part.warnings.end());
    report.fits.push_back(std::move(part.fit));
  }
  report.gradient = data_pullback(strip_ones_column(bar_phi)).flatten() + theta_grad;
  return report;
}

}  // namespace

GradientReport loss_and_gradient(const NetworkParams& params, const NetworkSpec& spec, const TrajectoryDataset& data,
                                 const std::vector<ConstraintSet>& sets, const PipelineOptions& options,
                                 bool fd_fallback) {
  try {
    return adjoint_gradient(params, spec, data, sets, options);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kDegenerateGradient || !fd_fallback) throw;
    GradientReport report;
    const DataTerms terms = data_terms(params, spec, data, options);
    for (const ConstraintSet& cs : sets) {
      report.fits.push_back(fit_constraint_set(terms, params, spec, cs, options));
      report.loss += half_sse(report.fits.back().fitted, terms.targets);
    }
    report.gradient = finite_difference_gradient(params, spec, data, sets, options);
    report.finite_difference = true;
    report.warnings.push_back(std::string("adjoint failed, used finite differences: ") + e.what());
    return report;
  }
}

VectorXd finite_difference_gradient(const NetworkParams& params, const NetworkSpec& spec,
                                    const TrajectoryDataset& data, const std::vector<ConstraintSet>& sets,
                                    const PipelineOptions& options, double step) {
  const VectorXd theta = params.flatten();
  VectorXd grad(theta.size());
  NetworkParams probe = params;
  for (Index i = 0; i < theta.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(theta(i)));
    VectorXd shifted = theta;
    shifted(i) = theta(i) + h;
    probe.assign(shifted);
    const double up = total_loss(probe, spec, data, sets, options).loss;
    shifted(i) = theta(i) - h;
    probe.assign(shifted);
    const double down = total_loss(probe, spec, data, sets, options).loss;
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace ceqln
