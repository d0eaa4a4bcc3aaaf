#include "ceqln/design.hpp"

#include <cmath>
#include <sstream>

#include "ceqln/error.hpp"

namespace ceqln {

DesignMatrix assemble_design(const BasisEvaluations& basis) {
  const Index n = basis.values.cols();
  DesignMatrix phi(n, basis.values.rows() + 1);
  phi.col(0).setOnes();
  phi.rightCols(basis.values.rows()) = basis.values.transpose();
  return phi;
}

void validate(const TrajectoryDataset& data) {
  if (data.targets.cols() != data.times.size()) {
    throw Error(ErrorKind::kConfig, "dataset: " + std::to_string(data.times.size()) + " times but " +
                                        std::to_string(data.targets.cols()) + " target columns");
  }
  if (!data.times.allFinite() || !data.targets.allFinite()) {
    throw Error(ErrorKind::kConfig, "dataset: non-finite entry");
  }
}

DesignRowFn network_design_rows(const NetworkParams& params, const NetworkSpec& spec) {
  return [params, spec](const VectorXd& times) { return MatrixXd(assemble_design(forward(params, spec, times))); };
}

std::vector<EqualityRow> deduplicated_equalities(const ConstraintSet& cs) {
  std::vector<EqualityRow> unique;
  unique.reserve(cs.equalities.size());
  for (const EqualityRow& row : cs.equalities) {
    bool duplicate = false;
    for (const EqualityRow& seen : unique) {
      if (seen.t == row.t && seen.dim == row.dim) {
        if (seen.value != row.value) {
          std::ostringstream os;
          os.precision(17);
          os << "constraint set r=" << cs.r << ": conflicting equalities at t=" << row.t << " dim=" << row.dim << " ("
             << seen.value << " vs " << row.value << ")";
          Error err(ErrorKind::kInfeasible, os.str());
          err.constraint_set = cs.r;
          throw err;
        }
        duplicate = true;
        break;
      }
    }
    if (!duplicate) unique.push_back(row);
  }
  return unique;
}

VectorXd equality_times(const std::vector<EqualityRow>& rows) {
  VectorXd t(static_cast<Index>(rows.size()));
  for (std::size_t p = 0; p < rows.size(); ++p) t(static_cast<Index>(p)) = rows[p].t;
  return t;
}

VectorXd inequality_times(const ConstraintSet& cs) {
  VectorXd t(static_cast<Index>(cs.inequalities.size()));
  for (std::size_t q = 0; q < cs.inequalities.size(); ++q) t(static_cast<Index>(q)) = cs.inequalities[q].t;
  return t;
}

namespace {

void check_dim(const ConstraintSet& cs, Index dim, Index dims) {
  if (dim < 0 || dim >= dims) {
    Error err(ErrorKind::kConfig, "constraint set r=" + std::to_string(cs.r) + ": dimension " + std::to_string(dim) +
                                      " out of range for D=" + std::to_string(dims));
    err.constraint_set = cs.r;
    throw err;
  }
}

void place(MatrixXd& A, Index row, Index dim, const Eigen::Ref<const Eigen::RowVectorXd>& phi) {
  A.block(row, dim * phi.size(), 1, phi.size()) = phi;
}

}  // namespace

EqualityBlock assemble_equality(const MatrixXd& rows_at_times, const ConstraintSet& cs, Index dims) {
  const std::vector<EqualityRow> rows = deduplicated_equalities(cs);
  const Index p = static_cast<Index>(rows.size());
  if (rows_at_times.rows() != p) {
    throw Error(ErrorKind::kConfig, "equality design rows: expected " + std::to_string(p) + " rows");
  }
  const Index m = rows_at_times.cols();
  EqualityBlock block;
  block.A = MatrixXd::Zero(p, dims * m);
  block.values.resize(p);
  block.times = equality_times(rows);
  for (Index i = 0; i < p; ++i) {
    const EqualityRow& row = rows[static_cast<std::size_t>(i)];
    check_dim(cs, row.dim, dims);
    if (!std::isfinite(row.value) || !std::isfinite(row.t)) {
      throw Error(ErrorKind::kConfig, "constraint set r=" + std::to_string(cs.r) + ": non-finite equality row");
    }
    place(block.A, i, row.dim, rows_at_times.row(i));
    block.values(i) = row.value;
    block.dims.push_back(row.dim);
  }
  return block;
}

EqualityBlock assemble_equality(const DesignRowFn& design_at, const ConstraintSet& cs, Index dims,
                                Index basis_width) {
  const VectorXd times = equality_times(deduplicated_equalities(cs));
  if (times.size() == 0) return assemble_equality(MatrixXd(0, basis_width), cs, dims);
  return assemble_equality(design_at(times), cs, dims);
}

InequalityBlock assemble_inequality(const MatrixXd& rows_at_times, const ConstraintSet& cs, Index dims) {
  const Index q = static_cast<Index>(cs.inequalities.size());
  if (rows_at_times.rows() != q) {
    throw Error(ErrorKind::kConfig, "inequality design rows: expected " + std::to_string(q) + " rows");
  }
  const Index m = rows_at_times.cols();
  InequalityBlock block;
  block.A = MatrixXd::Zero(q, dims * m);
  block.lower.resize(q);
  block.upper.resize(q);
  block.times = inequality_times(cs);
  for (Index i = 0; i < q; ++i) {
    const InequalityRow& row = cs.inequalities[static_cast<std::size_t>(i)];
    check_dim(cs, row.dim, dims);
    if (!(row.lower <= row.upper) || std::isnan(row.lower) || std::isnan(row.upper)) {
      std::ostringstream os;
      os << "constraint set r=" << cs.r << ": inequality row " << i << " has lower > upper";
      throw Error(ErrorKind::kConfig, os.str());
    }
    place(block.A, i, row.dim, rows_at_times.row(i));
    block.lower(i) = row.lower;
    block.upper(i) = row.upper;
    block.dims.push_back(row.dim);
  }
  return block;
}

InequalityBlock assemble_inequality(const DesignRowFn& design_at, const ConstraintSet& cs, Index dims,
                                    Index basis_width) {
  const VectorXd times = inequality_times(cs);
  if (times.size() == 0) return assemble_inequality(MatrixXd(0, basis_width), cs, dims);
  return assemble_inequality(design_at(times), cs, dims);
}

}  // namespace ceqln
