#include "ceqln/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ceqln/error.hpp"

namespace ceqln {

std::string_view to_string(CostMode mode) { return mode == CostMode::kPaper ? "paper" : "direct"; }

CostMode cost_mode_from_string(std::string_view name) {
  if (name == "paper") return CostMode::kPaper;
  if (name == "direct") return CostMode::kDirect;
  throw Error(ErrorKind::kConfig, "unknown cost mode '" + std::string(name) + "' (expected paper or direct)");
}

CostTerms build_cost(const DesignMatrix& phi, const MatrixXd& targets, double lambda, CostMode mode) {
  if (targets.cols() != phi.rows()) {
    throw Error(ErrorKind::kConfig, "build_cost: design has " + std::to_string(phi.rows()) + " rows but targets have " +
                                        std::to_string(targets.cols()) + " samples");
  }
  MatrixXd gram = phi.transpose() * phi;
  MatrixXd moments = phi.transpose() * targets.transpose();
  return build_cost_from_moments(std::move(gram), std::move(moments), lambda, mode);
}

CostTerms build_cost_from_moments(MatrixXd gram, MatrixXd moments, double lambda, CostMode mode) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::kConfig, "lambda_w must be nonnegative");
  const Index m = gram.rows();
  const Index dims = moments.cols();
  CostTerms cost;
  cost.lambda = lambda;
  cost.mode = mode;
  cost.P = MatrixXd::Zero(dims * m, dims * m);
  cost.q.resize(dims * m);
  MatrixXd block;
  if (mode == CostMode::kPaper) {
    block = 2.0 * gram.transpose() * gram;
  } else {
    block = 2.0 * gram;
  }
  block.diagonal().array() += 2.0 * lambda;
  block = 0.5 * (block + block.transpose());
  if (mode == CostMode::kPaper) {
    // B = sqrt(2) blkdiag([G; sqrt(lambda) I]), d = sqrt(2) [c_d; 0] per block.
    cost.factor.B = MatrixXd::Zero(2 * dims * m, dims * m);
    cost.factor.d = VectorXd::Zero(2 * dims * m);
  }
  const double root2 = std::sqrt(2.0);
  for (Index d = 0; d < dims; ++d) {
    cost.P.block(d * m, d * m, m, m) = block;
    if (mode == CostMode::kPaper) {
      cost.q.segment(d * m, m) = -2.0 * gram.transpose() * moments.col(d);
      cost.factor.B.block(2 * d * m, d * m, m, m) = root2 * gram;
      cost.factor.B.block(2 * d * m + m, d * m, m, m).diagonal().setConstant(root2 * std::sqrt(lambda));
      cost.factor.d.segment(2 * d * m, m) = root2 * moments.col(d);
    } else {
      cost.q.segment(d * m, m) = -2.0 * moments.col(d);
    }
  }
  cost.gram = std::move(gram);
  cost.moments = std::move(moments);
  return cost;
}

void validate(const QpProblem& qp) {
  const Index n = qp.P.rows();
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kConfig, "qp: " + what); };
  if (qp.P.cols() != n) fail("P is not square");
  if (qp.q.size() != n) fail("q has wrong length");
  if (qp.A_eq.rows() > 0 && qp.A_eq.cols() != n) fail("equality matrix has wrong column count");
  if (qp.b_eq.size() != qp.A_eq.rows()) fail("equality values have wrong length");
  if (qp.A_ineq.rows() > 0 && qp.A_ineq.cols() != n) fail("inequality matrix has wrong column count");
  if (qp.lower.size() != qp.A_ineq.rows() || qp.upper.size() != qp.A_ineq.rows()) fail("bounds have wrong length");
  const double scale = std::max(1.0, qp.P.cwiseAbs().maxCoeff());
  if (n > 0 && (qp.P - qp.P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) fail("P is not symmetric");
  if (!qp.factor.empty() && (qp.factor.B.cols() != n || qp.factor.d.size() != qp.factor.B.rows())) {
    fail("cost factor has wrong shape");
  }
  if (!qp.P.allFinite() || !qp.q.allFinite() || !qp.A_eq.allFinite() || !qp.b_eq.allFinite() ||
      !qp.A_ineq.allFinite()) {
    fail("non-finite entry");
  }
  for (Index i = 0; i < qp.lower.size(); ++i) {
    if (std::isnan(qp.lower(i)) || std::isnan(qp.upper(i)) || qp.lower(i) > qp.upper(i)) {
      fail("inequality row " + std::to_string(i) + " has lower > upper");
    }
  }
}

double objective(const MatrixXd& P, const VectorXd& q, const VectorXd& w) { return 0.5 * w.dot(P * w) + q.dot(w); }

KktSystem::KktSystem(const MatrixXd& P, const MatrixXd& A, const MatrixXd* factor) : P_(P), A_(A) {
  const Index n = P.rows();
  const Index m = A.rows();
  double cond_a = 1.0;
  if (m > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(A.transpose());
    rank_ = qr.rank();
    const MatrixXd q = qr.householderQ();
    range_ = q.leftCols(rank_);
    null_ = q.rightCols(n - rank_);
    r_ = qr.matrixR().topLeftCorner(rank_, rank_).triangularView<Eigen::Upper>();
    perm_ = qr.colsPermutation();
    if (rank_ > 0) cond_a = std::abs(r_(0, 0)) / std::abs(r_(rank_ - 1, rank_ - 1));
  } else {
    null_ = MatrixXd::Identity(n, n);
  }
  const Index free_dims = null_.cols();
  double cond_h = 1.0;
  if (free_dims > 0 && factor != nullptr && factor->size() > 0) {
    B_ = *factor;
    Eigen::ColPivHouseholderQR<MatrixXd> qr(B_ * null_);
    bz_q_ = MatrixXd(qr.householderQ()).leftCols(free_dims);
    bz_r_ = qr.matrixR().topRows(free_dims).triangularView<Eigen::Upper>();
    bz_perm_ = qr.colsPermutation();
    const double p_norm = P.cwiseAbs().colwise().sum().maxCoeff();
    const double b_norm = B_.cwiseAbs().colwise().sum().maxCoeff();
    const double r_min = bz_r_.diagonal().cwiseAbs().minCoeff();
    const double eps = std::numeric_limits<double>::epsilon();
    reduced_positive_ = b_norm > 0.0 && r_min > static_cast<double>(n) * eps * b_norm;
    cond_h = reduced_positive_ ? p_norm / (r_min * r_min) : std::numeric_limits<double>::infinity();
  } else if (free_dims > 0) {
    const MatrixXd reduced = null_.transpose() * P * null_;
    reduced_.compute(0.5 * (reduced + reduced.transpose()));
    const double p_norm = P.cwiseAbs().colwise().sum().maxCoeff();
    const double h_norm = reduced.cwiseAbs().colwise().sum().maxCoeff();
    const double d_min = reduced_.vectorD().minCoeff();
    const double eps = std::numeric_limits<double>::epsilon();
    reduced_positive_ = reduced_.info() == Eigen::Success && p_norm > 0.0 &&
                        d_min > static_cast<double>(n) * eps * p_norm;
    const double rcond = reduced_positive_ ? reduced_.rcond() : 0.0;
    cond_h = rcond > 0.0 ? p_norm / (rcond * h_norm) : std::numeric_limits<double>::infinity();
  }
  condition_ = std::max(cond_a, cond_h);
}

void KktSystem::solve(const VectorXd& r1, const VectorXd& r2, VectorXd& x, VectorXd& y) const {
  const Index n = P_.rows();
  x = VectorXd::Zero(n);
  if (rank_ > 0) {
    const VectorXd permuted = perm_.transpose() * r2;
    const VectorXd xy = r_.transpose().triangularView<Eigen::Lower>().solve(permuted);
    x = range_ * xy;
  }
  if (null_.cols() > 0) {
    const VectorXd rhs = null_.transpose() * (r1 - P_ * x);
    x += null_ * reduced_solve(rhs);
  }
  y = VectorXd::Zero(A_.rows());
  if (rank_ > 0) {
    const VectorXd v = range_.transpose() * (r1 - P_ * x);
    y = perm_ * VectorXd(r_.triangularView<Eigen::Upper>().solve(v));
  }
}

void KktSystem::solve_factored(const VectorXd& d, const VectorXd& r2, VectorXd& x, VectorXd& y) const {
  if (!factored()) throw Error(ErrorKind::kConfig, "KktSystem::solve_factored needs a cost factor");
  const Index n = P_.rows();
  x = VectorXd::Zero(n);
  if (rank_ > 0) {
    const VectorXd permuted = perm_.transpose() * r2;
    const VectorXd xy = r_.transpose().triangularView<Eigen::Lower>().solve(permuted);
    x = range_ * xy;
  }
  if (null_.cols() > 0) {
    // min |B Z u - (d - B x)| through the QR of B Z.
    const VectorXd e = d - B_ * x;
    const VectorXd u = bz_r_.triangularView<Eigen::Upper>().solve(bz_q_.transpose() * e);
    x += null_ * (bz_perm_ * u);
  }
  y = VectorXd::Zero(A_.rows());
  if (rank_ > 0) {
    const VectorXd v = range_.transpose() * (B_.transpose() * (d - B_ * x));
    y = perm_ * VectorXd(r_.triangularView<Eigen::Upper>().solve(v));
  }
}

VectorXd KktSystem::reduced_solve(const VectorXd& v) const {
  if (!factored()) return reduced_.solve(v);
  // (Z^T P Z)^{-1} = Pi R^{-1} R^{-T} Pi^T
  VectorXd u = bz_perm_.transpose() * v;
  u = bz_r_.transpose().triangularView<Eigen::Lower>().solve(u);
  u = bz_r_.triangularView<Eigen::Upper>().solve(u);
  return bz_perm_ * u;
}

double KktSystem::consistency_residual(const VectorXd& b) const {
  if (A_.rows() == 0) return 0.0;
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A_);
  const VectorXd x = cod.solve(b);
  return (A_ * x - b).cwiseAbs().maxCoeff();
}

double KktSystem::null_fraction(const VectorXd& v) const {
  const double norm = v.norm();
  if (norm == 0.0) return 0.0;
  return (null_.transpose() * v).norm() / norm;
}

namespace {

double scaled(double tol, const VectorXd& b) {
  return tol * std::max(1.0, b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0);
}

void check_solvable(const KktSystem& kkt, const VectorXd& b, const QpSettings& settings) {
  if (!kkt.full_rank()) {
    const double residual = kkt.consistency_residual(b);
    std::ostringstream os;
    if (residual > scaled(settings.eq_tol, b)) {
      os << "equality rows are inconsistent (least-squares residual " << residual << ")";
      Error err(ErrorKind::kInfeasible, os.str());
      err.condition_estimate = kkt.condition_estimate();
      throw err;
    }
    os << "equality rows are linearly dependent (rank " << kkt.rank() << ")";
    Error err(ErrorKind::kRedundant, os.str());
    err.condition_estimate = kkt.condition_estimate();
    throw err;
  }
  if (!kkt.reduced_positive()) {
    std::ostringstream os;
    os << "KKT system is singular on the feasible subspace (condition estimate " << kkt.condition_estimate() << ")";
    Error err(ErrorKind::kIllConditioned, os.str());
    err.condition_estimate = kkt.condition_estimate();
    throw err;
  }
}

// Solve with one step of iterative refinement. With a factor the first solve
// is the least-squares form and the residual is taken as B^T (d - B x).
void refined_solve(const KktSystem& kkt, const MatrixXd& P, const MatrixXd& A, const VectorXd& r1,
                   const VectorXd& r2, VectorXd& x, VectorXd& y, const CostFactor* factor = nullptr) {
  VectorXd res1;
  if (factor != nullptr && kkt.factored()) {
    kkt.solve_factored(factor->d, r2, x, y);
    res1 = factor->B.transpose() * (factor->d - factor->B * x);
  } else {
    kkt.solve(r1, r2, x, y);
    res1 = r1 - P * x;
  }
  if (A.rows() > 0) res1 -= A.transpose() * y;
  const VectorXd res2 = A.rows() > 0 ? VectorXd(r2 - A * x) : VectorXd(0);
  VectorXd dx, dy;
  kkt.solve(res1, res2, dx, dy);
  x += dx;
  y += dy;
}

// One side of an inequality row in the form n^T x >= bound.
struct HalfSpace {
  Index row;
  BoundSide side;
};

}  // namespace

QpSolution solve_equality(const MatrixXd& P, const VectorXd& q, const MatrixXd& A, const VectorXd& b,
                          const QpSettings& settings, const CostFactor* factor) {
  const Index n = P.rows();
  MatrixXd rows = A.rows() > 0 ? A : MatrixXd(0, n);
  if (rows.cols() != n || b.size() != rows.rows() || q.size() != n) {
    throw Error(ErrorKind::kConfig, "solve_equality: inconsistent shapes");
  }
  if (factor != nullptr && factor->empty()) factor = nullptr;
  KktSystem kkt(P, rows, factor != nullptr ? &factor->B : nullptr);
  check_solvable(kkt, b, settings);
  QpSolution sol;
  refined_solve(kkt, P, rows, -q, b, sol.w, sol.eq_multipliers, factor);
  sol.condition_estimate = kkt.condition_estimate();
  sol.objective = objective(P, q, sol.w);
  if (!sol.w.allFinite()) throw Error(ErrorKind::kNumerical, "equality QP produced non-finite weights");
  if (rows.rows() > 0) {
    const double residual = (rows * sol.w - b).cwiseAbs().maxCoeff();
    if (residual > scaled(settings.eq_tol, b)) {
      std::ostringstream os;
      os << "equality residual " << residual << " exceeds tolerance (condition estimate " << sol.condition_estimate
         << ")";
      Error err(ErrorKind::kIllConditioned, os.str());
      err.condition_estimate = sol.condition_estimate;
      throw err;
    }
  }
  return sol;
}

QpSolution solve(const QpProblem& qp, const QpSettings& settings) {
  validate(qp);
  const Index n = qp.variables();
  const MatrixXd A_eq = qp.A_eq.rows() > 0 ? qp.A_eq : MatrixXd(0, n);
  const Index me = A_eq.rows();
  const CostFactor* factor = qp.factor.empty() ? nullptr : &qp.factor;
  const MatrixXd* B = factor != nullptr ? &factor->B : nullptr;
  QpSolution base = solve_equality(qp.P, qp.q, A_eq, qp.b_eq, settings, factor);
  if (qp.A_ineq.rows() == 0) return base;

  std::vector<HalfSpace> halves;
  for (Index i = 0; i < qp.A_ineq.rows(); ++i) {
    if (std::isfinite(qp.lower(i))) halves.push_back({i, BoundSide::kLower});
    if (std::isfinite(qp.upper(i))) halves.push_back({i, BoundSide::kUpper});
  }
  auto normal = [&](const HalfSpace& h) -> VectorXd {
    const VectorXd a = qp.A_ineq.row(h.row).transpose();
    return h.side == BoundSide::kLower ? a : VectorXd(-a);
  };
  auto bound = [&](const HalfSpace& h) { return h.side == BoundSide::kLower ? qp.lower(h.row) : -qp.upper(h.row); };
  auto slack = [&](const HalfSpace& h, const VectorXd& x) { return normal(h).dot(x) - bound(h); };

  const Index total_rows = me + static_cast<Index>(halves.size());
  const int cap = settings.max_iterations > 0 ? settings.max_iterations : std::max<int>(50, 50 * total_rows);

  std::vector<std::size_t> active;  // indices into halves
  std::vector<double> dual;         // multipliers in n^T x >= bound form, nonnegative
  std::vector<char> is_active(halves.size(), 0);
  auto constraint_matrix = [&]() {
    MatrixXd A(me + static_cast<Index>(active.size()), n);
    if (me > 0) A.topRows(me) = A_eq;
    for (std::size_t j = 0; j < active.size(); ++j) A.row(me + static_cast<Index>(j)) = normal(halves[active[j]]);
    return A;
  };
  auto drop = [&](std::size_t j) {
    is_active[active[j]] = 0;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(j));
    dual.erase(dual.begin() + static_cast<std::ptrdiff_t>(j));
  };
  auto infeasible = [&](const std::string& detail) {
    Error err(ErrorKind::kInfeasible, "no point satisfies all constraints: " + detail);
    throw err;
  };

  VectorXd x = base.w;
  int iterations = 0;
  double condition = base.condition_estimate;
  const double eps = std::numeric_limits<double>::epsilon();
  QpSolution sol;
  for (;;) {
    for (;;) {
      std::ptrdiff_t pick = -1;
      double worst = settings.ineq_tol;
      for (std::size_t c = 0; c < halves.size(); ++c) {
        if (is_active[c]) continue;
        const double violation = -slack(halves[c], x);
        if (violation > worst) {
          worst = violation;
          pick = static_cast<std::ptrdiff_t>(c);
        }
      }
      if (pick < 0) break;
      const HalfSpace& p = halves[static_cast<std::size_t>(pick)];
      const VectorXd np = normal(p);
      double dual_p = 0.0;
      for (;;) {
        if (++iterations > cap) {
          Error err(ErrorKind::kNonConvergence,
                    "active-set iteration cap " + std::to_string(cap) + " reached without convergence");
          throw err;
        }
        const MatrixXd A = constraint_matrix();
        const KktSystem kkt(qp.P, A, B);
        if (!kkt.reduced_positive()) {
          Error err(ErrorKind::kIllConditioned, "reduced Hessian lost positive definiteness during active-set steps");
          err.condition_estimate = kkt.condition_estimate();
          throw err;
        }
        condition = std::max(condition, kkt.condition_estimate());
        VectorXd z, y;
        kkt.solve(np, VectorXd::Zero(A.rows()), z, y);
        const VectorXd& r = y;  // G z + N r = n_p
        double partial = std::numeric_limits<double>::infinity();
        std::ptrdiff_t blocking = -1;
        const double r_floor = 1e-14 * (1.0 + (r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0));
        for (std::size_t j = 0; j < active.size(); ++j) {
          const double rj = r(me + static_cast<Index>(j));
          if (rj > r_floor) {
            const double ratio = dual[j] / rj;
            if (ratio < partial) {
              partial = ratio;
              blocking = static_cast<std::ptrdiff_t>(j);
            }
          }
        }
        const bool dependent = kkt.null_fraction(np) <= 100.0 * std::sqrt(static_cast<double>(n)) * eps;
        const double curvature = z.dot(np);
        double full = std::numeric_limits<double>::infinity();
        if (!dependent && curvature > 0.0) full = -slack(p, x) / curvature;
        const double step = std::min(partial, full);
        if (!std::isfinite(step)) {
          std::ostringstream os;
          os << "inequality row " << p.row << (p.side == BoundSide::kLower ? " (lower)" : " (upper)")
             << " cannot be satisfied together with the active constraints";
          infeasible(os.str());
        }
        for (std::size_t j = 0; j < active.size(); ++j) {
          dual[j] = std::max(0.0, dual[j] - step * r(me + static_cast<Index>(j)));
        }
        dual_p += step;
        if (std::isfinite(full)) x += step * z;
        if (full <= partial) {
          active.push_back(static_cast<std::size_t>(pick));
          dual.push_back(dual_p);
          is_active[static_cast<std::size_t>(pick)] = 1;
          break;
        }
        drop(static_cast<std::size_t>(blocking));
      }
    }

    // Re-solve on the final working set for accurate weights and multipliers.
    const MatrixXd A = constraint_matrix();
    VectorXd rhs(A.rows());
    if (me > 0) rhs.head(me) = qp.b_eq;
    for (std::size_t j = 0; j < active.size(); ++j) rhs(me + static_cast<Index>(j)) = bound(halves[active[j]]);
    const KktSystem kkt(qp.P, A, B);
    check_solvable(kkt, rhs, settings);
    VectorXd w, y;
    refined_solve(kkt, qp.P, A, -qp.q, rhs, w, y, factor);
    condition = std::max(condition, kkt.condition_estimate());
    bool feasible = true;
    for (std::size_t c = 0; c < halves.size(); ++c) {
      if (!is_active[c] && -slack(halves[c], w) > settings.ineq_tol) feasible = false;
    }
    x = w;
    if (!feasible) {
      if (++iterations > cap) throw Error(ErrorKind::kNonConvergence, "active-set refinement did not settle");
      continue;
    }
    sol.w = w;
    sol.eq_multipliers = y.head(me);
    for (std::size_t j = 0; j < active.size(); ++j) {
      const HalfSpace& h = halves[active[j]];
      // Row j of A is the half-space normal; convert to the multiplier on the raw row a.
      const double on_normal = y(me + static_cast<Index>(j));
      const double mu = h.side == BoundSide::kLower ? on_normal : -on_normal;
      sol.active.push_back({h.row, h.side, mu});
      if (std::abs(mu) <= settings.multiplier_tol) {
        sol.warnings.push_back("degenerate active row " + std::to_string(h.row) + ": multiplier " +
                               std::to_string(mu) + " is within tolerance of zero");
      }
    }
    break;
  }
  std::sort(sol.active.begin(), sol.active.end(), [](const ActiveRow& a, const ActiveRow& b) {
    return a.row != b.row ? a.row < b.row : a.side < b.side;
  });
  sol.iterations = iterations;
  sol.condition_estimate = condition;
  sol.objective = objective(qp.P, qp.q, sol.w);
  return sol;
}

QpProblem make_problem(const CostTerms& cost, const EqualityBlock& eq, const InequalityBlock& ineq) {
  QpProblem qp;
  qp.P = cost.P;
  qp.q = cost.q;
  qp.A_eq = eq.A;
  qp.b_eq = eq.values;
  qp.A_ineq = ineq.A;
  qp.lower = ineq.lower;
  qp.upper = ineq.upper;
  qp.factor = cost.factor;
  return qp;
}

}  // namespace ceqln
