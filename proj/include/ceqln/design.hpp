#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

#include "ceqln/network.hpp"

namespace ceqln {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Row n is [1, phi_1(t_n), ..., phi_{M-1}(t_n)].
using DesignMatrix = MatrixXd;

DesignMatrix assemble_design(const BasisEvaluations& basis);

struct EqualityRow {
  double t = 0.0;
  Index dim = 0;
  double value = 0.0;
};

struct InequalityRow {
  double t = 0.0;
  Index dim = 0;
  double lower = -kInf;
  double upper = kInf;
};

// One adaptation r of the task.
struct ConstraintSet {
  int r = 1;
  std::vector<EqualityRow> equalities;
  std::vector<InequalityRow> inequalities;

  bool empty() const { return equalities.empty() && inequalities.empty(); }
};

// Demonstrations: times (N) paired with D-dimensional targets (D x N). Several
// demonstrations are stored back to back, so times need not be sorted.
struct TrajectoryDataset {
  VectorXd times;
  MatrixXd targets;

  Index size() const { return times.size(); }
  Index dims() const { return targets.rows(); }
};

// Throws ErrorKind::kConfig on mismatched lengths or non-finite entries.
void validate(const TrajectoryDataset& data);

// Evaluates design rows Phi(t) for a batch of times: returns times.size() x M.
using DesignRowFn = std::function<MatrixXd(const VectorXd& times)>;

DesignRowFn network_design_rows(const NetworkParams& params, const NetworkSpec& spec);

// Stacked constraint rows in the D*M-wide block layout: row p holds Phi(times[p])
// in column block dims[p] and zeros elsewhere.
struct EqualityBlock {
  MatrixXd A;
  VectorXd values;
  VectorXd times;
  std::vector<Index> dims;

  Index rows() const { return A.rows(); }
};

struct InequalityBlock {
  MatrixXd A;
  VectorXd lower;
  VectorXd upper;
  VectorXd times;
  std::vector<Index> dims;

  Index rows() const { return A.rows(); }
};

// Exact duplicate (t, dim, value) rows are collapsed to one; duplicates with
// differing values are rejected as kInfeasible. dim >= D is kConfig.
EqualityBlock assemble_equality(const DesignRowFn& design_at, const ConstraintSet& cs, Index dims, Index basis_width);
EqualityBlock assemble_equality(const MatrixXd& rows_at_times, const ConstraintSet& cs, Index dims);

InequalityBlock assemble_inequality(const DesignRowFn& design_at, const ConstraintSet& cs, Index dims,
                                    Index basis_width);
InequalityBlock assemble_inequality(const MatrixXd& rows_at_times, const ConstraintSet& cs, Index dims);

// Unique list of equality rows after duplicate elimination, in input order.
std::vector<EqualityRow> deduplicated_equalities(const ConstraintSet& cs);

VectorXd equality_times(const std::vector<EqualityRow>& rows);
VectorXd inequality_times(const ConstraintSet& cs);

}  // namespace ceqln
