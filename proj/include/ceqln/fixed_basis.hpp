#pragma once

#include <string_view>
#include <vector>

#include "ceqln/pipeline.hpp"

namespace ceqln {

enum class BasisFamily {
  kFourierToy,   // [t, sin(theta1 t), cos(theta2 t)]
  kGaussianToy,  // [exp((0.25 - t^2) / (2 theta1)), exp((0.75 - t^2) / (2 theta2))]
  kPolyTrig,     // [t, t^2, sin(k1 t), cos(k1 t), sin(k2 t), cos(k2 t), ...]
};

std::string_view to_string(BasisFamily family);
BasisFamily basis_family_from_string(std::string_view name);

struct FixedBasisSpec {
  BasisFamily family = BasisFamily::kFourierToy;
  double theta1 = 1.0;
  double theta2 = 1.0;
  std::vector<double> frequencies;  // kPolyTrig only

  Index basis_count() const;
};

// Throws kConfig for nonpositive Gaussian widths or an empty frequency list.
void validate(const FixedBasisSpec& spec);

BasisEvaluations evaluate_fixed(const FixedBasisSpec& spec, const VectorXd& times);
DesignRowFn fixed_design_rows(const FixedBasisSpec& spec);

// Constrained fit with any design-row source; the same assembly and solve as
// the learned-basis pipeline.
ConstraintFit fit_with_design(const DesignRowFn& design_at, const TrajectoryDataset& data, const ConstraintSet& cs,
                              const PipelineOptions& options);

// theta_k = 0.01 + 0.799 k (Fourier) or 0.1 + 0.07 k (Gaussian), k = 0..9.
std::vector<double> sweep_grid(BasisFamily family);

enum class CellStatus { kFeasible, kInfeasible, kIllConditioned };
std::string_view to_string(CellStatus status);

struct SweepCell {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double mse = 0.0;  // NaN when no solution was produced
  CellStatus status = CellStatus::kFeasible;
  double condition = 0.0;
  double max_equality_residual = 0.0;
  std::string detail;
};

struct SweepOptions {
  PipelineOptions pipeline{0.01, CostMode::kPaper, {}};
  double condition_limit = 1e12;
};

// Row-major over (theta1, theta2) on the full 10 x 10 grid.
std::vector<SweepCell> sweep(const TrajectoryDataset& data, const ConstraintSet& cs, BasisFamily family,
                             const SweepOptions& options = {});

}  // namespace ceqln
