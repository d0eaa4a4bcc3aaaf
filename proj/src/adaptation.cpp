#include "ceqln/adaptation.hpp"

#include <algorithm>
#include <cmath>

namespace ceqln {

Adapter::Adapter(NetworkParams params, NetworkSpec spec, const TrajectoryDataset& data, PipelineOptions options)
    : params_(std::move(params)), spec_(std::move(spec)), options_(options) {
  validate(params_, spec_);
  terms_ = data_terms(params_, spec_, data, options_);
}

ConstraintFit Adapter::adapt(const ConstraintSet& cs) const {
  return fit_constraint_set(terms_, params_, spec_, cs, options_);
}

ConstraintFit adapt(const NetworkParams& params, const NetworkSpec& spec, const TrajectoryDataset& data,
                    const ConstraintSet& cs, const PipelineOptions& options) {
  return Adapter(params, spec, data, options).adapt(cs);
}

namespace {

ConstraintReport build_report(const EqualityBlock& eq, const InequalityBlock& ineq, const VectorXd& w, int r,
                              double tolerance) {
  ConstraintReport report;
  report.r = r;
  if (eq.rows() > 0) {
    const VectorXd v = eq.A * w;
    for (Index p = 0; p < eq.rows(); ++p) {
      RowResidual row;
      row.equality = true;
      row.t = eq.times(p);
      row.dim = eq.dims[static_cast<std::size_t>(p)];
      row.lower = row.upper = eq.values(p);
      row.value = v(p);
      row.residual = std::abs(v(p) - eq.values(p));
      report.rows.push_back(row);
    }
  }
  if (ineq.rows() > 0) {
    const VectorXd v = ineq.A * w;
    for (Index p = 0; p < ineq.rows(); ++p) {
      RowResidual row;
      row.equality = false;
      row.t = ineq.times(p);
      row.dim = ineq.dims[static_cast<std::size_t>(p)];
      row.lower = ineq.lower(p);
      row.upper = ineq.upper(p);
      row.value = v(p);
      row.residual = std::max({0.0, ineq.lower(p) - v(p), v(p) - ineq.upper(p)});
      report.rows.push_back(row);
    }
  }
  for (RowResidual& row : report.rows) {
    row.pass = row.residual <= tolerance;
    report.max_residual = std::max(report.max_residual, row.residual);
    report.pass = report.pass && row.pass;
  }
  return report;
}

}  // namespace

ConstraintReport constraint_report(const DesignRowFn& design_at, Index basis_width, const VectorXd& w,
                                   const ConstraintSet& cs, Index dims, double tolerance) {
  const EqualityBlock eq = assemble_equality(design_at, cs, dims, basis_width);
  const InequalityBlock ineq = assemble_inequality(design_at, cs, dims, basis_width);
  return build_report(eq, ineq, w, cs.r, tolerance);
}

ConstraintReport constraint_report(const ConstraintFit& fit, double tolerance) {
  return build_report(fit.eq, fit.ineq, fit.solution.w, fit.r, tolerance);
}

}  // namespace ceqln
