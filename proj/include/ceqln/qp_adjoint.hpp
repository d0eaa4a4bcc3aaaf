#pragma once

#include <string>
#include <vector>

#include "ceqln/design.hpp"
#include "ceqln/qp.hpp"

namespace ceqln {

// Cotangents of a scalar loss with respect to every QP input, with shapes
// matching QpProblem. Rows of A_ineq / bounds that are inactive stay zero.
struct QpCotangents {
  MatrixXd P;
  VectorXd q;
  MatrixXd A_eq;
  VectorXd b_eq;
  MatrixXd A_ineq;
  VectorXd lower;
  VectorXd upper;
  std::vector<std::string> warnings;
};

// Implicit differentiation of the KKT conditions at the active set of `sol`.
// Throws kDegenerateGradient if the KKT matrix is singular.
QpCotangents solution_pullback(const QpProblem& qp, const QpSolution& sol, const VectorXd& dL_dw,
                               const QpSettings& settings = {});

// Design-row cotangents: one M-wide row per data sample, equality row and
// inequality row, in the order used by assembly.
struct DesignCotangents {
  MatrixXd data;
  MatrixXd equality;
  MatrixXd inequality;
};

// Maps QP-input cotangents back through cost construction and block placement.
DesignCotangents chain_to_design(const QpCotangents& bar, const DesignMatrix& phi, const MatrixXd& targets,
                                 const CostTerms& cost, const EqualityBlock& eq, const InequalityBlock& ineq);

// Cotangent on BasisEvaluations::values ((M-1) x N): drops the ones column.
MatrixXd strip_ones_column(const MatrixXd& design_cotangent);

}  // namespace ceqln
