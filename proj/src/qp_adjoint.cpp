#include "ceqln/qp_adjoint.hpp"

#include <cmath>
#include <sstream>

#include "ceqln/error.hpp"

namespace ceqln {

QpCotangents solution_pullback(const QpProblem& qp, const QpSolution& sol, const VectorXd& dL_dw,
                               const QpSettings& settings) {
  const Index n = qp.variables();
  if (dL_dw.size() != n || sol.w.size() != n) throw Error(ErrorKind::kConfig, "solution_pullback: shape mismatch");
  const Index me = qp.A_eq.rows();
  const Index ma = static_cast<Index>(sol.active.size());

  MatrixXd A(me + ma, n);
  VectorXd multipliers(me + ma);
  if (me > 0) {
    A.topRows(me) = qp.A_eq;
    multipliers.head(me) = sol.eq_multipliers;
  }
  QpCotangents bar;
  for (Index j = 0; j < ma; ++j) {
    const ActiveRow& row = sol.active[static_cast<std::size_t>(j)];
    A.row(me + j) = qp.A_ineq.row(row.row);
    multipliers(me + j) = row.multiplier;
    if (std::abs(row.multiplier) <= settings.multiplier_tol) {
      bar.warnings.push_back("degenerate active row " + std::to_string(row.row) + " kept active");
    }
  }

  const KktSystem kkt(qp.P, A, qp.factor.empty() ? nullptr : &qp.factor.B);
  if (!kkt.full_rank() || !kkt.reduced_positive()) {
    std::ostringstream os;
    os << "KKT matrix is singular at the solution (condition estimate " << kkt.condition_estimate() << ")";
    Error err(ErrorKind::kDegenerateGradient, os.str());
    err.condition_estimate = kkt.condition_estimate();
    throw err;
  }
  VectorXd dw, dlam;
  kkt.solve(dL_dw, VectorXd::Zero(me + ma), dw, dlam);
  if (!dw.allFinite() || !dlam.allFinite()) throw Error(ErrorKind::kDegenerateGradient, "non-finite adjoint");

  bar.P = -0.5 * (dw * sol.w.transpose() + sol.w * dw.transpose());
  bar.q = -dw;
  const MatrixXd dA = -(multipliers * dw.transpose() + dlam * sol.w.transpose());
  bar.A_eq = dA.topRows(me);
  bar.b_eq = dlam.head(me);
  bar.A_ineq = MatrixXd::Zero(qp.A_ineq.rows(), n);
  bar.lower = VectorXd::Zero(qp.A_ineq.rows());
  bar.upper = VectorXd::Zero(qp.A_ineq.rows());
  for (Index j = 0; j < ma; ++j) {
    const ActiveRow& row = sol.active[static_cast<std::size_t>(j)];
    bar.A_ineq.row(row.row) += dA.row(me + j);
    if (row.side == BoundSide::kLower) {
      bar.lower(row.row) += dlam(me + j);
    } else {
      bar.upper(row.row) += dlam(me + j);
    }
  }
  return bar;
}

namespace {

MatrixXd gather_rows(const MatrixXd& bar_block, const std::vector<Index>& dims, Index width) {
  MatrixXd rows(bar_block.rows(), width);
  for (Index p = 0; p < bar_block.rows(); ++p) {
    rows.row(p) = bar_block.block(p, dims[static_cast<std::size_t>(p)] * width, 1, width);
  }
  return rows;
}

}  // namespace

DesignCotangents chain_to_design(const QpCotangents& bar, const DesignMatrix& phi, const MatrixXd& targets,
                                 const CostTerms& cost, const EqualityBlock& eq, const InequalityBlock& ineq) {
  const Index m = phi.cols();
  const Index dims = targets.rows();
  if (bar.P.rows() != dims * m || bar.q.size() != dims * m) {
    throw Error(ErrorKind::kConfig, "chain_to_design: cotangent shape does not match D*M");
  }
  DesignCotangents out;
  MatrixXd bar_gram = MatrixXd::Zero(m, m);
  MatrixXd bar_moments(m, dims);
  for (Index d = 0; d < dims; ++d) {
    const MatrixXd bar_block = bar.P.block(d * m, d * m, m, m);
    const VectorXd bar_qd = bar.q.segment(d * m, m);
    if (cost.mode == CostMode::kPaper) {
      bar_gram += 2.0 * cost.gram * (bar_block + bar_block.transpose());
      bar_gram -= 2.0 * cost.moments.col(d) * bar_qd.transpose();
      bar_moments.col(d) = -2.0 * cost.gram * bar_qd;
    } else {
      bar_gram += 2.0 * bar_block;
      bar_moments.col(d) = -2.0 * bar_qd;
    }
  }
  out.data = phi * (bar_gram + bar_gram.transpose()) + targets.transpose() * bar_moments.transpose();
  out.equality = eq.rows() > 0 ? gather_rows(bar.A_eq, eq.dims, m) : MatrixXd(0, m);
  out.inequality = ineq.rows() > 0 ? gather_rows(bar.A_ineq, ineq.dims, m) : MatrixXd(0, m);
  return out;
}

MatrixXd strip_ones_column(const MatrixXd& design_cotangent) {
  return design_cotangent.rightCols(design_cotangent.cols() - 1).transpose();
}

}  // namespace ceqln
