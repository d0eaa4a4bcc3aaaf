#pragma once

#include <string>
#include <vector>

#include "ceqln/pipeline.hpp"

namespace ceqln {

// Re-solves the QP for new constraint sets with theta frozen. The design
// matrix, Gram matrix and quadratic cost depend only on theta and the data, so
// they are built once; each call only assembles its own constraint rows.
class Adapter {
 public:
  Adapter(NetworkParams params, NetworkSpec spec, const TrajectoryDataset& data, PipelineOptions options);

  ConstraintFit adapt(const ConstraintSet& cs) const;

  const NetworkParams& params() const { return params_; }
  const NetworkSpec& spec() const { return spec_; }
  const DataTerms& terms() const { return terms_; }
  const PipelineOptions& options() const { return options_; }

 private:
  NetworkParams params_;
  NetworkSpec spec_;
  PipelineOptions options_;
  DataTerms terms_;
};

ConstraintFit adapt(const NetworkParams& params, const NetworkSpec& spec, const TrajectoryDataset& data,
                    const ConstraintSet& cs, const PipelineOptions& options);

struct RowResidual {
  bool equality = true;
  double t = 0.0;
  Index dim = 0;
  double lower = 0.0;  // target value for equality rows
  double upper = 0.0;
  double value = 0.0;
  double residual = 0.0;  // |value - target| or bound violation (0 when satisfied)
  bool pass = true;
};

struct ConstraintReport {
  int r = 1;
  std::vector<RowResidual> rows;
  double max_residual = 0.0;
  bool pass = true;
};

// Residual of every constraint row of `cs` for stacked weights `w` and design
// rows from `design_at`.
ConstraintReport constraint_report(const DesignRowFn& design_at, Index basis_width, const VectorXd& w,
                                   const ConstraintSet& cs, Index dims, double tolerance);
ConstraintReport constraint_report(const ConstraintFit& fit, double tolerance);

}  // namespace ceqln
