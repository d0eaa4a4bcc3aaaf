#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "ceqln/error.hpp"
#include "ceqln/network.hpp"
#include "ceqln/qp.hpp"

namespace ceqln::testing {

// Hand-rolled generators on top of the library's deterministic source.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : source_(seed) {}
  double uniform(double lo, double hi) { return source_.uniform(lo, hi); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(source_.next() * (hi - lo + 1));
  }
  MatrixXd matrix(Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = uniform(lo, hi);
    return m;
  }
  VectorXd vector(Index n, double lo = -1.0, double hi = 1.0) { return matrix(n, 1, lo, hi).col(0); }
  MatrixXd spd(Index n, double shift = 0.1) {
    const MatrixXd b = matrix(n, n);
    return b * b.transpose() + shift * MatrixXd::Identity(n, n);
  }
  Activation activation() { return static_cast<Activation>(integer(0, 5)); }

 private:
  UniformSource source_;
};

inline NetworkSpec random_spec(Gen& gen, int max_layers, int max_units, Index basis_count) {
  NetworkSpec spec;
  const int layers = gen.integer(1, max_layers);
  for (int l = 0; l < layers; ++l) {
    LayerSpec layer;
    const int units = gen.integer(1, max_units);
    for (int u = 0; u < units; ++u) layer.activations.push_back(gen.activation());
    spec.hidden.push_back(layer);
  }
  spec.basis_count = basis_count;
  return spec;
}

struct OracleResult {
  VectorXd w;
  double objective = std::numeric_limits<double>::infinity();
};

// Enumerates every assignment of each inequality row to {inactive, lower, upper},
// solves the full KKT system with a pivoted LU, and keeps the best candidate
// satisfying primal feasibility and multiplier signs.
inline std::optional<OracleResult> brute_force_qp(const QpProblem& qp, double tol = 1e-9) {
  const Index n = qp.P.rows();
  const Index me = qp.A_eq.rows();
  const Index mi = qp.A_ineq.rows();
  std::optional<OracleResult> best;
  std::vector<int> state(static_cast<std::size_t>(mi), 0);
  Index combos = 1;
  for (Index i = 0; i < mi; ++i) combos *= 3;
  for (Index code = 0; code < combos; ++code) {
    Index c = code;
    bool ok = true;
    std::vector<Index> rows;
    std::vector<int> sides;
    for (Index i = 0; i < mi; ++i) {
      const int s = static_cast<int>(c % 3);
      c /= 3;
      if (s == 1 && !std::isfinite(qp.lower(i))) ok = false;
      if (s == 2 && !std::isfinite(qp.upper(i))) ok = false;
      if (s != 0) {
        rows.push_back(i);
        sides.push_back(s);
      }
    }
    if (!ok) continue;
    const Index k = me + static_cast<Index>(rows.size());
    MatrixXd kkt = MatrixXd::Zero(n + k, n + k);
    VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = qp.P;
    rhs.head(n) = -qp.q;
    for (Index e = 0; e < me; ++e) {
      kkt.block(n + e, 0, 1, n) = qp.A_eq.row(e);
      kkt.block(0, n + e, n, 1) = qp.A_eq.row(e).transpose();
      rhs(n + e) = qp.b_eq(e);
    }
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const Index r = me + static_cast<Index>(j);
      kkt.block(n + r, 0, 1, n) = qp.A_ineq.row(rows[j]);
      kkt.block(0, n + r, n, 1) = qp.A_ineq.row(rows[j]).transpose();
      rhs(n + r) = sides[j] == 1 ? qp.lower(rows[j]) : qp.upper(rows[j]);
    }
    Eigen::FullPivLU<MatrixXd> lu(kkt);
    if (lu.rank() < n + k) continue;
    const VectorXd sol = lu.solve(rhs);
    const VectorXd w = sol.head(n);
    for (std::size_t j = 0; j < rows.size() && ok; ++j) {
      const double mu = sol(n + me + static_cast<Index>(j));
      if (sides[j] == 1 && mu > tol) ok = false;
      if (sides[j] == 2 && mu < -tol) ok = false;
    }
    if (mi > 0) {
      const VectorXd v = qp.A_ineq * w;
      for (Index i = 0; i < mi && ok; ++i) {
        if (v(i) < qp.lower(i) - tol || v(i) > qp.upper(i) + tol) ok = false;
      }
    }
    if (!ok) continue;
    const double obj = objective(qp.P, qp.q, w);
    if (!best || obj < best->objective) best = OracleResult{w, obj};
  }
  return best;
}

// Random strictly convex QP with a feasible interior point.
inline QpProblem random_qp(Gen& gen, Index n, Index equalities, Index inequalities) {
  QpProblem qp;
  qp.P = gen.spd(n);
  qp.q = gen.vector(n, -2.0, 2.0);
  qp.A_eq = gen.matrix(equalities, n);
  const VectorXd x0 = gen.vector(n);
  qp.b_eq = qp.A_eq * x0;
  qp.A_ineq = gen.matrix(inequalities, n);
  qp.lower.resize(inequalities);
  qp.upper.resize(inequalities);
  const VectorXd v = qp.A_ineq * x0;
  for (Index i = 0; i < inequalities; ++i) {
    const int kind = gen.integer(0, 2);
    const double lo = v(i) - gen.uniform(0.0, 0.5);
    const double hi = v(i) + gen.uniform(0.0, 0.5);
    qp.lower(i) = kind == 1 ? -std::numeric_limits<double>::infinity() : lo;
    qp.upper(i) = kind == 0 ? std::numeric_limits<double>::infinity() : hi;
  }
  return qp;
}

// Kind of the ceqln::Error raised by fn; records a failure if nothing is thrown.
inline ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::kConfig;
}

inline double relative_error(double a, double b, double abs_floor) {
  const double diff = std::abs(a - b);
  if (diff <= abs_floor) return 0.0;
  return diff / std::max(std::abs(a), std::abs(b));
}

}  // namespace ceqln::testing
