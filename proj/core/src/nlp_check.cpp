// Independent re-evaluation of solver output. Nothing here shares code with
// the interior-point iteration in nlp.cpp.
#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "cooplane/nlp.hpp"

namespace cooplane {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double neg_part_max(const VectorXd& v) {
  double m = 0.0;
  for (int i = 0; i < v.size(); ++i) m = std::max(m, -v[i]);
  return m;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

double jacobian_error(const std::function<VectorXd(const VectorXd&)>& f, const MatrixXd& J, VectorXd x,
                      double step) {
  double worst = 0.0;
  for (int j = 0; j < x.size(); ++j) {
    const double h = step * std::max(1.0, std::abs(x[j]));
    const double xj = x[j];
    x[j] = xj + h;
    const VectorXd fp = f(x);
    x[j] = xj - h;
    const VectorXd fm = f(x);
    x[j] = xj;
    const VectorXd fd = (fp - fm) / (2.0 * h);
    for (int i = 0; i < fd.size(); ++i) worst = std::max(worst, relative_error(J(i, j), fd[i]));
  }
  return worst;
}

}  // namespace

KktResiduals kkt_residuals(const NlpProblem& p, const NlpSolution& s) {
  const VectorXd& x = s.x;
  KktResiduals r;
  VectorXd stat = p.gradient(x);
  if (p.m_eq > 0) {
    const MatrixXd J = MatrixXd(p.eq_jacobian(x));
    stat -= J.transpose() * s.y_eq;
    r.primal = std::max(r.primal, p.eq(x).lpNorm<Eigen::Infinity>());
  }
  if (p.m_ineq > 0) {
    const MatrixXd J = MatrixXd(p.ineq_jacobian(x));
    const VectorXd g = p.ineq(x);
    stat -= J.transpose() * s.y_ineq;
    r.primal = std::max(r.primal, neg_part_max(g));
    for (int i = 0; i < g.size(); ++i) r.complementarity = std::max(r.complementarity, std::abs(s.y_ineq[i] * g[i]));
    r.dual_sign = std::max(r.dual_sign, neg_part_max(s.y_ineq));
  }
  for (int i = 0; i < p.n; ++i) {
    if (std::isfinite(p.lower[i])) {
      stat[i] -= s.z_lower[i];
      r.primal = std::max(r.primal, p.lower[i] - x[i]);
      r.complementarity = std::max(r.complementarity, std::abs(s.z_lower[i] * (x[i] - p.lower[i])));
      r.dual_sign = std::max(r.dual_sign, -s.z_lower[i]);
    }
    if (std::isfinite(p.upper[i])) {
      stat[i] += s.z_upper[i];
      r.primal = std::max(r.primal, x[i] - p.upper[i]);
      r.complementarity = std::max(r.complementarity, std::abs(s.z_upper[i] * (p.upper[i] - x[i])));
      r.dual_sign = std::max(r.dual_sign, -s.z_upper[i]);
    }
  }
  r.stationarity = p.n > 0 ? stat.lpNorm<Eigen::Infinity>() : 0.0;
  return r;
}

double DerivativeCheck::worst() const {
  return std::max({gradient_error, eq_jacobian_error, ineq_jacobian_error});
}

DerivativeCheck check_derivatives(const NlpProblem& p, const std::vector<VectorXd>& points, double step) {
  DerivativeCheck out;
  auto objective_as_vector = [&](const VectorXd& x) { return VectorXd::Constant(1, p.objective(x)); };
  for (const auto& x : points) {
    const MatrixXd g = p.gradient(x).transpose();
    out.gradient_error = std::max(out.gradient_error, jacobian_error(objective_as_vector, g, x, step));
    if (p.m_eq > 0) {
      out.eq_jacobian_error = std::max(out.eq_jacobian_error, jacobian_error(p.eq, MatrixXd(p.eq_jacobian(x)), x, step));
    }
    if (p.m_ineq > 0) {
      out.ineq_jacobian_error =
          std::max(out.ineq_jacobian_error, jacobian_error(p.ineq, MatrixXd(p.ineq_jacobian(x)), x, step));
    }
    ++out.points;
  }
  return out;
}

}  // namespace cooplane
