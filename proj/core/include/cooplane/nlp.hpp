#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace cooplane {

using SparseMat = Eigen::SparseMatrix<double>;

/// min f(x)  s.t.  c(x) = 0,  g(x) >= 0,  lower <= x <= upper.
/// Infinite bounds are allowed. Jacobians are m x n.
struct NlpProblem {
  int n = 0;
  int m_eq = 0;
  int m_ineq = 0;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd x0;

  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eq;
  std::function<SparseMat(const Eigen::VectorXd&)> eq_jacobian;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> ineq;
  std::function<SparseMat(const Eigen::VectorXd&)> ineq_jacobian;
  /// Optional Hessian of L = f - y_eq'c - y_ineq'g. Only entries with
  /// row >= col are read. Without it the solver differences the gradient
  /// of L, which is only sensible for small n.
  std::function<SparseMat(const Eigen::VectorXd& x, const Eigen::VectorXd& y_eq,
                          const Eigen::VectorXd& y_ineq)>
      hessian;

  /// Throws std::invalid_argument on inconsistent dimensions, missing
  /// callbacks, lower > upper, or non-finite callback values at x0.
  void validate() const;
};

enum class NlpStatus { kOptimalLocal, kMaxIter, kInfeasibleDetected, kNumericFailure };

std::string_view to_string(NlpStatus status);

struct KktResiduals {
  double stationarity = 0.0;     // |grad f - J_c'y - J_g'y_g - z_l + z_u|_inf
  double primal = 0.0;           // equality, inequality and bound violation
  double complementarity = 0.0;  // |y_g g|, |z_l (x - l)|, |z_u (u - x)|
  double dual_sign = 0.0;        // negative parts of y_g, z_l, z_u

  double worst() const;
};

struct NlpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y_eq;
  Eigen::VectorXd y_ineq;   // >= 0 at a KKT point
  Eigen::VectorXd z_lower;  // zero where the bound is infinite
  Eigen::VectorXd z_upper;
  double objective = 0.0;
  NlpStatus status = NlpStatus::kNumericFailure;
  int iterations = 0;
  double mu = 0.0;
  KktResiduals residuals;  // scaled as in the termination test
};

struct NlpWarmStart {
  Eigen::VectorXd y_eq;
  Eigen::VectorXd y_ineq;
  Eigen::VectorXd z_lower;
  Eigen::VectorXd z_upper;
};

struct NlpOptions {
  double tol = 1e-6;
  int max_iter = 200;
  double mu_init = 0.1;
  double mu_decrease = 0.2;      // linear factor of the barrier update
  double mu_superlinear = 1.5;   // exponent of the barrier update
  double bound_push = 1e-2;      // initial distance from bounds, relative
  std::optional<NlpWarmStart> warm_start;
  std::ostream* iteration_log = nullptr;  // CSV, one row per iteration
};

NlpSolution solve(const NlpProblem& problem, const NlpOptions& options = {});

/// Unscaled KKT residuals recomputed from the problem callbacks alone.
KktResiduals kkt_residuals(const NlpProblem& problem, const NlpSolution& solution);

struct DerivativeCheck {
  double gradient_error = 0.0;     // worst relative error over all points
  double eq_jacobian_error = 0.0;
  double ineq_jacobian_error = 0.0;
  int points = 0;

  double worst() const;
};

/// Central differences of objective and constraints at the given points.
/// The error of an entry is |analytic - fd| / max(1, |analytic|, |fd|).
DerivativeCheck check_derivatives(const NlpProblem& problem,
                                  const std::vector<Eigen::VectorXd>& points, double step = 1e-6);

}  // namespace cooplane
