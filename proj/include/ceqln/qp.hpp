#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ceqln/design.hpp"

namespace ceqln {

enum class CostMode {
  kPaper,   // minimize ||Gw - c||^2 with G = Phi^T Phi, c = Phi^T y
  kDirect,  // minimize ||Phi w - y||^2
};

std::string_view to_string(CostMode mode);
CostMode cost_mode_from_string(std::string_view name);

// P = B^T B and q = -B^T d, so the cost is 1/2 |B w - d|^2 up to a constant.
// Solvers that receive a factor work with B and never square it again.
struct CostFactor {
  MatrixXd B;
  VectorXd d;
  bool empty() const { return B.size() == 0; }
};

// Quadratic cost 1/2 w^T P w + q^T w over the stacked weights [w_0; ...; w_{D-1}].
struct CostTerms {
  MatrixXd P;
  VectorXd q;
  CostFactor factor;  // set in paper mode, where P is a square of the Gram matrix
  MatrixXd gram;     // Phi^T Phi (shared by every dimension)
  MatrixXd moments;  // M x D, column d is Phi^T y_d
  double lambda = 0.0;
  CostMode mode = CostMode::kPaper;
};

CostTerms build_cost(const DesignMatrix& phi, const MatrixXd& targets, double lambda, CostMode mode = CostMode::kPaper);
// Same result from a precomputed Gram matrix and moment columns.
CostTerms build_cost_from_moments(MatrixXd gram, MatrixXd moments, double lambda, CostMode mode = CostMode::kPaper);

struct QpProblem {
  MatrixXd P;
  VectorXd q;
  MatrixXd A_eq;
  VectorXd b_eq;
  MatrixXd A_ineq;
  VectorXd lower;  // -inf for no bound
  VectorXd upper;  // +inf for no bound
  CostFactor factor;  // optional; must agree with P and q

  Index variables() const { return P.rows(); }
};

// Throws kConfig for inconsistent shapes, asymmetric P, or lower > upper.
void validate(const QpProblem& qp);

enum class BoundSide : std::uint8_t { kLower, kUpper };

struct ActiveRow {
  Index row = 0;
  BoundSide side = BoundSide::kLower;
  double multiplier = 0.0;  // <= 0 on a lower bound, >= 0 on an upper bound
};

// KKT convention: P w + q + A_eq^T nu + sum_active mu_i a_i = 0.
struct QpSolution {
  VectorXd w;
  VectorXd eq_multipliers;
  std::vector<ActiveRow> active;
  double objective = 0.0;
  double condition_estimate = 1.0;
  int iterations = 0;
  std::vector<std::string> warnings;
};

struct QpSettings {
  double eq_tol = 1e-8;
  double ineq_tol = 1e-8;
  double multiplier_tol = 1e-10;
  int max_iterations = 0;  // 0 selects 50 * (number of constraint rows), at least 50
};

// Factorization of [[P, A^T], [A, 0]] by the null-space method. Requires A to
// have full row rank and Z^T P Z to be positive definite for a basis Z of
// null(A). With a factor P = B^T B the reduced Hessian is handled through a QR
// factorization of B Z.
class KktSystem {
 public:
  KktSystem(const MatrixXd& P, const MatrixXd& A, const MatrixXd* factor = nullptr);

  // Solves P x + A^T y = r1, A x = r2.
  void solve(const VectorXd& r1, const VectorXd& r2, VectorXd& x, VectorXd& y) const;
  // Solves P x + A^T y = B^T d, A x = r2 as a least-squares problem in B. Needs a factor.
  void solve_factored(const VectorXd& d, const VectorXd& r2, VectorXd& x, VectorXd& y) const;
  bool factored() const { return B_.size() > 0; }

  Index rank() const { return rank_; }
  bool full_rank() const { return rank_ == A_.rows(); }
  bool reduced_positive() const { return reduced_positive_; }
  double condition_estimate() const { return condition_; }
  // Least-squares residual of A x = b, used to tell redundant rows from inconsistent ones.
  double consistency_residual(const VectorXd& b) const;
  // Norm of the component of v orthogonal to the row space of A, relative to |v|.
  double null_fraction(const VectorXd& v) const;

 private:
  VectorXd reduced_solve(const VectorXd& v) const;

  MatrixXd P_;
  MatrixXd A_;
  Index rank_ = 0;
  MatrixXd range_;  // Q1: n x rank
  MatrixXd null_;   // Z: n x (n - rank)
  MatrixXd r_;      // leading rank x rank block of R
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> perm_;
  Eigen::LDLT<MatrixXd> reduced_;
  MatrixXd B_;
  MatrixXd bz_q_;  // thin Q of B Z
  MatrixXd bz_r_;  // R of B Z
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic> bz_perm_;
  bool reduced_positive_ = true;
  double condition_ = 1.0;
};

QpSolution solve_equality(const MatrixXd& P, const VectorXd& q, const MatrixXd& A, const VectorXd& b,
                          const QpSettings& settings = {}, const CostFactor* factor = nullptr);

// Dual active-set method started from the equality-constrained optimum.
QpSolution solve(const QpProblem& qp, const QpSettings& settings = {});

double objective(const MatrixXd& P, const VectorXd& q, const VectorXd& w);

// Builds the QP for one constraint set from a cost and assembled constraint blocks.
QpProblem make_problem(const CostTerms& cost, const EqualityBlock& eq, const InequalityBlock& ineq);

}  // namespace ceqln
