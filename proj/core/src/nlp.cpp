#include "cooplane/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/SparseCholesky>

namespace cooplane {
namespace {

using Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kKappaSigma = 1e10;  // z reset band
constexpr double kKappaEps = 10.0;    // barrier subproblem tolerance factor
constexpr double kTauMin = 0.99;      // fraction to the boundary
constexpr double kArmijo = 1e-4;
constexpr double kScaleMax = 100.0;
constexpr int kMaxBacktracks = 30;

bool all_finite(const VectorXd& v) { return v.allFinite(); }

bool all_finite(const SparseMat& m) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMat::InnerIterator it(m, k); it; ++it)
      if (!std::isfinite(it.value())) return false;
  return true;
}

// Callback values at one x.
struct Eval {
  double f = 0.0;
  VectorXd grad, c, g;
  SparseMat Jc, Jg;
  bool finite = true;
};

class Solver {
 public:
  Solver(const NlpProblem& p, const NlpOptions& o) : p_(p), o_(o) {
    n_ = p.n;
    mE_ = p.m_eq;
    mI_ = p.m_ineq;
    nw_ = n_ + mI_;
    m_ = mE_ + mI_;
    lw_ = VectorXd::Zero(nw_);
    uw_ = VectorXd::Constant(nw_, kInf);
    lw_.head(n_) = p.lower;
    uw_.head(n_) = p.upper;
    has_l_.resize(nw_);
    has_u_.resize(nw_);
    for (int i = 0; i < nw_; ++i) {
      has_l_[i] = std::isfinite(lw_[i]);
      has_u_[i] = std::isfinite(uw_[i]);
    }
  }

  NlpSolution run();

 private:
  Eval evaluate(const VectorXd& x, bool derivatives) const;
  VectorXd constraint_residual(const Eval& e, const VectorXd& w) const;
  VectorXd jh_transpose(const Eval& e, const VectorXd& y) const;
  VectorXd barrier_gradient(const Eval& e, const VectorXd& w, double mu) const;
  double barrier_value(double f, const VectorXd& w, double mu) const;
  double error(const Eval& e, double mu, KktResiduals* out = nullptr) const;
  SparseMat hessian(const VectorXd& x) const;
  bool factorize(const SparseMat& W, double mu, double& delta_w);
  VectorXd solve_kkt(const VectorXd& rhs) const;
  void push_interior(VectorXd& w, double push) const;
  double max_step(const VectorXd& v, const VectorXd& dv, const VectorXd& lo, const VectorXd& hi,
                  double tau) const;
  NlpSolution package(const VectorXd& w, const VectorXd& y, const VectorXd& zl, const VectorXd& zu,
                      double f, NlpStatus status, int iter, double mu, const KktResiduals& r) const;
  void log_row(int iter, double f, double mu, const KktResiduals& r, double alpha_pr,
               double alpha_du, double delta_w, int trials) const;

  const NlpProblem& p_;
  const NlpOptions& o_;
  int n_ = 0, mE_ = 0, mI_ = 0, nw_ = 0, m_ = 0;
  VectorXd lw_, uw_;
  std::vector<bool> has_l_, has_u_;

  // Current iterate.
  VectorXd w_, y_, zl_, zu_;

  // KKT factorization state.
  Eigen::SimplicialLDLT<SparseMat, Eigen::Lower> ldlt_;
  SparseMat kkt_;
  bool analyzed_ = false;
  std::vector<int> pattern_outer_, pattern_inner_;
  double delta_w_last_ = 0.0;
  SparseMat Jc_cur_, Jg_cur_;
  VectorXd sigma_;
};

Eval Solver::evaluate(const VectorXd& x, bool derivatives) const {
  Eval e;
  e.f = p_.objective(x);
  e.c = mE_ > 0 ? p_.eq(x) : VectorXd();
  e.g = mI_ > 0 ? p_.ineq(x) : VectorXd();
  e.finite = std::isfinite(e.f) && all_finite(e.c) && all_finite(e.g);
  if (derivatives && e.finite) {
    e.grad = p_.gradient(x);
    e.Jc = mE_ > 0 ? p_.eq_jacobian(x) : SparseMat(0, n_);
    e.Jg = mI_ > 0 ? p_.ineq_jacobian(x) : SparseMat(0, n_);
    e.finite = all_finite(e.grad) && all_finite(e.Jc) && all_finite(e.Jg);
  }
  return e;
}

VectorXd Solver::constraint_residual(const Eval& e, const VectorXd& w) const {
  VectorXd h(m_);
  if (mE_ > 0) h.head(mE_) = e.c;
  if (mI_ > 0) h.tail(mI_) = e.g - w.tail(mI_);
  return h;
}

VectorXd Solver::jh_transpose(const Eval& e, const VectorXd& y) const {
  VectorXd r = VectorXd::Zero(nw_);
  if (mE_ > 0) r.head(n_) += e.Jc.transpose() * y.head(mE_);
  if (mI_ > 0) {
    r.head(n_) += e.Jg.transpose() * y.tail(mI_);
    r.tail(mI_) -= y.tail(mI_);
  }
  return r;
}

VectorXd Solver::barrier_gradient(const Eval& e, const VectorXd& w, double mu) const {
  VectorXd g = VectorXd::Zero(nw_);
  g.head(n_) = e.grad;
  for (int i = 0; i < nw_; ++i) {
    if (has_l_[i]) g[i] -= mu / (w[i] - lw_[i]);
    if (has_u_[i]) g[i] += mu / (uw_[i] - w[i]);
  }
  return g;
}

double Solver::barrier_value(double f, const VectorXd& w, double mu) const {
  double v = f;
  for (int i = 0; i < nw_; ++i) {
    if (has_l_[i]) v -= mu * std::log(w[i] - lw_[i]);
    if (has_u_[i]) v -= mu * std::log(uw_[i] - w[i]);
  }
  return v;
}

double Solver::error(const Eval& e, double mu, KktResiduals* out) const {
  VectorXd grad_w = VectorXd::Zero(nw_);
  grad_w.head(n_) = e.grad;
  const VectorXd dual = grad_w + jh_transpose(e, y_) - zl_ + zu_;
  const VectorXd h = constraint_residual(e, w_);
  double compl_ = 0.0;
  double zsum = 0.0;
  int zcount = 0;
  for (int i = 0; i < nw_; ++i) {
    if (has_l_[i]) {
      compl_ = std::max(compl_, std::abs((w_[i] - lw_[i]) * zl_[i] - mu));
      zsum += std::abs(zl_[i]);
      ++zcount;
    }
    if (has_u_[i]) {
      compl_ = std::max(compl_, std::abs((uw_[i] - w_[i]) * zu_[i] - mu));
      zsum += std::abs(zu_[i]);
      ++zcount;
    }
  }
  const double s_d =
      std::max(kScaleMax, (y_.lpNorm<1>() + zsum) / std::max(1, m_ + zcount)) / kScaleMax;
  const double s_c = std::max(kScaleMax, zsum / std::max(1, zcount)) / kScaleMax;
  KktResiduals r;
  r.stationarity = (nw_ > 0 ? dual.lpNorm<Eigen::Infinity>() : 0.0) / s_d;
  r.primal = m_ > 0 ? h.lpNorm<Eigen::Infinity>() : 0.0;
  r.complementarity = compl_ / s_c;
  if (out) *out = r;
  return r.worst();
}

SparseMat Solver::hessian(const VectorXd& x) const {
  const VectorXd y_eq_user = mE_ > 0 ? VectorXd(-y_.head(mE_)) : VectorXd();
  const VectorXd y_in_user = mI_ > 0 ? VectorXd(-y_.tail(mI_)) : VectorXd();
  if (p_.hessian) return p_.hessian(x, y_eq_user, y_in_user);

  // Central differences of grad L, symmetrized.
  auto grad_l = [&](const VectorXd& xx) {
    VectorXd gl = p_.gradient(xx);
    if (mE_ > 0) gl -= p_.eq_jacobian(xx).transpose() * y_eq_user;
    if (mI_ > 0) gl -= p_.ineq_jacobian(xx).transpose() * y_in_user;
    return gl;
  };
  Eigen::MatrixXd H(n_, n_);
  VectorXd xp = x;
  for (int j = 0; j < n_; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    const VectorXd gp = grad_l(xp);
    xp[j] = x[j] - h;
    const VectorXd gm = grad_l(xp);
    xp[j] = x[j];
    H.col(j) = (gp - gm) / (2.0 * h);
  }
  H = 0.5 * (H + H.transpose()).eval();
  return H.sparseView(0.0, 0.0);
}

bool Solver::factorize(const SparseMat& W, double mu, double& delta_w) {
  const int N = nw_ + m_;
  auto build = [&](double dw, double dc) {
    Triplets t;
    t.reserve(static_cast<std::size_t>(W.nonZeros() + Jc_cur_.nonZeros() + Jg_cur_.nonZeros() + 2 * N));
    for (int k = 0; k < W.outerSize(); ++k)
      for (SparseMat::InnerIterator it(W, k); it; ++it)
        if (it.row() >= it.col()) t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < nw_; ++i) t.emplace_back(i, i, sigma_[i] + dw);
    for (int k = 0; k < Jc_cur_.outerSize(); ++k)
      for (SparseMat::InnerIterator it(Jc_cur_, k); it; ++it)
        t.emplace_back(nw_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int k = 0; k < Jg_cur_.outerSize(); ++k)
      for (SparseMat::InnerIterator it(Jg_cur_, k); it; ++it)
        t.emplace_back(nw_ + mE_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < mI_; ++i) t.emplace_back(nw_ + mE_ + i, n_ + i, -1.0);
    for (int i = 0; i < m_; ++i) t.emplace_back(nw_ + i, nw_ + i, -dc);
    kkt_.resize(N, N);
    kkt_.setFromTriplets(t.begin(), t.end());
    kkt_.makeCompressed();
  };
  auto try_factor = [&](double dw, double dc, bool& singular) {
    build(dw, dc);
    std::vector<int> outer(kkt_.outerIndexPtr(), kkt_.outerIndexPtr() + N + 1);
    std::vector<int> inner(kkt_.innerIndexPtr(), kkt_.innerIndexPtr() + kkt_.nonZeros());
    if (!analyzed_ || outer != pattern_outer_ || inner != pattern_inner_) {
      ldlt_.analyzePattern(kkt_);
      pattern_outer_ = std::move(outer);
      pattern_inner_ = std::move(inner);
      analyzed_ = true;
    }
    ldlt_.factorize(kkt_);
    singular = false;
    if (ldlt_.info() != Eigen::Success) {
      singular = true;
      return false;
    }
    const VectorXd& D = ldlt_.vectorD();
    const double scale = std::max(1.0, D.lpNorm<Eigen::Infinity>());
    int pos = 0, neg = 0;
    for (int i = 0; i < N; ++i) {
      if (!std::isfinite(D[i])) return false;
      // With dc > 0 the matrix is quasi-definite and small pivots are genuine.
      if (dc == 0.0 && std::abs(D[i]) <= 1e-15 * scale) {
        singular = true;
        return false;
      }
      (D[i] > 0.0 ? pos : neg)++;
    }
    return pos == nw_ && neg == m_;
  };

  double dc = 0.0;
  bool singular = false;
  delta_w = 0.0;
  if (try_factor(0.0, 0.0, singular)) return true;
  if (singular) dc = 1e-8 * std::pow(mu, 0.25);
  delta_w = delta_w_last_ == 0.0 ? 1e-4 : std::max(1e-20, delta_w_last_ / 3.0);
  while (delta_w < 1e40) {
    if (try_factor(delta_w, dc, singular)) {
      delta_w_last_ = delta_w;
      return true;
    }
    if (singular && dc == 0.0) dc = 1e-8 * std::pow(mu, 0.25);
    delta_w *= delta_w_last_ == 0.0 ? 100.0 : 8.0;
  }
  return false;
}

VectorXd Solver::solve_kkt(const VectorXd& rhs) const { return ldlt_.solve(rhs); }

void Solver::push_interior(VectorXd& w, double push) const {
  for (int i = 0; i < nw_; ++i) {
    const double width = has_l_[i] && has_u_[i] ? uw_[i] - lw_[i] : kInf;
    if (has_l_[i]) w[i] = std::max(w[i], lw_[i] + std::min(push * std::max(1.0, std::abs(lw_[i])), push * width));
    if (has_u_[i]) w[i] = std::min(w[i], uw_[i] - std::min(push * std::max(1.0, std::abs(uw_[i])), push * width));
  }
}

double Solver::max_step(const VectorXd& v, const VectorXd& dv, const VectorXd& lo, const VectorXd& hi,
                        double tau) const {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i) {
    if (std::isfinite(lo[i]) && dv[i] < 0.0) alpha = std::min(alpha, tau * (v[i] - lo[i]) / -dv[i]);
    if (std::isfinite(hi[i]) && dv[i] > 0.0) alpha = std::min(alpha, tau * (hi[i] - v[i]) / dv[i]);
  }
  return alpha;
}

NlpSolution Solver::package(const VectorXd& w, const VectorXd& y, const VectorXd& zl, const VectorXd& zu,
                            double f, NlpStatus status, int iter, double mu, const KktResiduals& r) const {
  NlpSolution s;
  s.x = w.head(n_);
  s.y_eq = mE_ > 0 ? VectorXd(-y.head(mE_)) : VectorXd();
  s.y_ineq = mI_ > 0 ? VectorXd(-y.tail(mI_)) : VectorXd();
  s.z_lower = zl.head(n_);
  s.z_upper = zu.head(n_);
  s.objective = f;
  s.status = status;
  s.iterations = iter;
  s.mu = mu;
  s.residuals = r;
  return s;
}

void Solver::log_row(int iter, double f, double mu, const KktResiduals& r, double alpha_pr, double alpha_du,
                     double delta_w, int trials) const {
  if (o_.iteration_log == nullptr) return;
  *o_.iteration_log << iter << ',' << f << ',' << mu << ',' << r.primal << ',' << r.stationarity << ','
                    << r.complementarity << ',' << alpha_pr << ',' << alpha_du << ',' << delta_w << ','
                    << trials << '\n';
}

NlpSolution Solver::run() {
  if (o_.iteration_log != nullptr) {
    *o_.iteration_log << "iter,objective,mu,inf_pr,inf_du,compl,alpha_pr,alpha_du,delta_w,ls_trials\n";
  }
  double mu = o_.mu_init;
  const double mu_min = o_.tol / 10.0;

  // Starting point.
  w_ = VectorXd::Zero(nw_);
  w_.head(n_) = p_.x0;
  push_interior(w_, o_.bound_push);
  {
    const VectorXd x = w_.head(n_);
    if (mI_ > 0) {
      VectorXd g0 = p_.ineq(x);
      if (!all_finite(g0)) {
        return package(w_, VectorXd::Zero(m_), VectorXd::Zero(nw_), VectorXd::Zero(nw_), kInf,
                       NlpStatus::kNumericFailure, 0, mu, {});
      }
      w_.tail(mI_) = g0;
      push_interior(w_, o_.bound_push);
    }
  }
  y_ = VectorXd::Zero(m_);
  zl_ = VectorXd::Zero(nw_);
  zu_ = VectorXd::Zero(nw_);
  for (int i = 0; i < nw_; ++i) {
    if (has_l_[i]) zl_[i] = 1.0;
    if (has_u_[i]) zu_[i] = 1.0;
  }
  if (o_.warm_start) {
    const auto& ws = *o_.warm_start;
    const double floor = 1e-3 * std::min(1.0, mu);
    if (ws.y_eq.size() == mE_ && mE_ > 0) y_.head(mE_) = -ws.y_eq;
    if (ws.y_ineq.size() == mI_ && mI_ > 0) {
      y_.tail(mI_) = -ws.y_ineq;
      for (int i = 0; i < mI_; ++i) zl_[n_ + i] = std::max(ws.y_ineq[i], floor);
    }
    for (int i = 0; i < n_; ++i) {
      if (has_l_[i] && ws.z_lower.size() == n_) zl_[i] = std::max(ws.z_lower[i], floor);
      if (has_u_[i] && ws.z_upper.size() == n_) zu_[i] = std::max(ws.z_upper[i], floor);
    }
  }

  double nu = 1.0;  // l1 penalty
  NlpSolution best;
  double best_err = kInf;
  int ls_failures = 0;
  std::vector<double> theta_history;

  for (int iter = 0;; ++iter) {
    const VectorXd x = w_.head(n_);
    Eval e = evaluate(x, true);
    if (!e.finite) {
      KktResiduals r;
      auto s = package(w_, y_, zl_, zu_, e.f, NlpStatus::kNumericFailure, iter, mu, r);
      return s;
    }
    KktResiduals r0;
    const double err0 = error(e, 0.0, &r0);
    if (err0 < best_err) {
      best_err = err0;
      best = package(w_, y_, zl_, zu_, e.f, NlpStatus::kMaxIter, iter, mu, r0);
    }
    if (err0 <= o_.tol) {
      log_row(iter, e.f, mu, r0, 0.0, 0.0, 0.0, 0);
      return package(w_, y_, zl_, zu_, e.f, NlpStatus::kOptimalLocal, iter, mu, r0);
    }
    if (iter >= o_.max_iter) {
      best.iterations = iter;
      return best;
    }

    // Barrier update.
    while (mu > mu_min && error(e, mu) <= kKappaEps * mu) {
      mu = std::max(mu_min, std::min(o_.mu_decrease * mu, std::pow(mu, o_.mu_superlinear)));
    }
    const double tau = std::max(kTauMin, 1.0 - mu);

    // Infeasibility: constraint violation stuck at a stationary point of |h|^2.
    const VectorXd h = constraint_residual(e, w_);
    const double theta = m_ > 0 ? h.lpNorm<Eigen::Infinity>() : 0.0;
    theta_history.push_back(theta);
    if (theta_history.size() > 15 && theta > 1e-4) {
      const double old = theta_history[theta_history.size() - 16];
      VectorXd gth = jh_transpose(e, h);
      for (int i = 0; i < nw_; ++i) {
        const bool at_l = has_l_[i] && w_[i] - lw_[i] < 1e-6 && gth[i] > 0.0;
        const bool at_u = has_u_[i] && uw_[i] - w_[i] < 1e-6 && gth[i] < 0.0;
        if (at_l || at_u) gth[i] = 0.0;
      }
      if (theta > 0.99 * old && (gth.lpNorm<Eigen::Infinity>() <= 1e-3 * theta || ls_failures >= 3)) {
        auto s = package(w_, y_, zl_, zu_, e.f, NlpStatus::kInfeasibleDetected, iter, mu, r0);
        return s;
      }
    }

    // Newton step.
    Jc_cur_ = e.Jc;
    Jg_cur_ = e.Jg;
    sigma_ = VectorXd::Zero(nw_);
    for (int i = 0; i < nw_; ++i) {
      if (has_l_[i]) sigma_[i] += zl_[i] / (w_[i] - lw_[i]);
      if (has_u_[i]) sigma_[i] += zu_[i] / (uw_[i] - w_[i]);
    }
    SparseMat W = n_ > 0 ? hessian(x) : SparseMat(0, 0);
    if (W.rows() != n_ || W.cols() != n_ || !all_finite(W)) {
      return package(w_, y_, zl_, zu_, e.f, NlpStatus::kNumericFailure, iter, mu, r0);
    }
    W.conservativeResize(nw_, nw_);
    double delta_w = 0.0;
    if (!factorize(W, mu, delta_w)) {
      return package(w_, y_, zl_, zu_, e.f, NlpStatus::kNumericFailure, iter, mu, r0);
    }
    const VectorXd grad_phi = barrier_gradient(e, w_, mu);
    VectorXd rhs(nw_ + m_);
    rhs.head(nw_) = -(grad_phi + jh_transpose(e, y_));
    if (m_ > 0) rhs.tail(m_) = -h;
    const VectorXd d = solve_kkt(rhs);
    if (!d.allFinite()) return package(w_, y_, zl_, zu_, e.f, NlpStatus::kNumericFailure, iter, mu, r0);
    const VectorXd dw = d.head(nw_);
    const VectorXd dy = d.tail(m_);

    VectorXd dzl = VectorXd::Zero(nw_), dzu = VectorXd::Zero(nw_);
    for (int i = 0; i < nw_; ++i) {
      if (has_l_[i]) dzl[i] = mu / (w_[i] - lw_[i]) - zl_[i] - zl_[i] / (w_[i] - lw_[i]) * dw[i];
      if (has_u_[i]) dzu[i] = mu / (uw_[i] - w_[i]) - zu_[i] + zu_[i] / (uw_[i] - w_[i]) * dw[i];
    }

    const double alpha_max = max_step(w_, dw, lw_, uw_, tau);
    const VectorXd zero = VectorXd::Zero(nw_), inf = VectorXd::Constant(nw_, kInf);
    const double alpha_z = std::min(max_step(zl_, dzl, zero, inf, tau), max_step(zu_, dzu, zero, inf, tau));

    // Merit function and penalty update.
    const double h1 = m_ > 0 ? h.lpNorm<1>() : 0.0;
    const double slope_phi = grad_phi.dot(dw);
    if (h1 > 0.0) {
      double curv = 0.0;
      {
        const VectorXd Wdw = W.selfadjointView<Eigen::Lower>() * dw;
        curv = dw.dot(Wdw) + dw.dot(sigma_.cwiseProduct(dw)) + delta_w * dw.squaredNorm();
      }
      const double nu_trial = (slope_phi + 0.5 * std::max(0.0, curv)) / (0.9 * h1);
      if (nu < nu_trial) nu = nu_trial + 1.0;
    }
    const double phi0 = barrier_value(e.f, w_, mu) + nu * h1;
    const double slope = slope_phi - nu * h1;

    auto merit_at = [&](const VectorXd& wt, double& f_out) {
      const Eval et = evaluate(wt.head(n_), false);
      f_out = et.f;
      if (!et.finite) return kInf;
      for (int i = 0; i < nw_; ++i) {
        if ((has_l_[i] && wt[i] <= lw_[i]) || (has_u_[i] && wt[i] >= uw_[i])) return kInf;
      }
      const double ht = m_ > 0 ? constraint_residual(et, wt).lpNorm<1>() : 0.0;
      return barrier_value(et.f, wt, mu) + nu * ht;
    };

    double alpha = alpha_max;
    int trials = 0;
    bool accepted = false;
    VectorXd w_new = w_;
    double f_new = e.f;
    for (; trials < kMaxBacktracks; ++trials) {
      const VectorXd wt = w_ + alpha * dw;
      double ft = 0.0;
      const double mt = merit_at(wt, ft);
      if (slope >= 0.0 ? mt <= phi0 + 1e-12 * std::abs(phi0) : mt <= phi0 + kArmijo * alpha * slope) {
        w_new = wt;
        f_new = ft;
        accepted = true;
        break;
      }
      if (trials == 0 && m_ > 0 && std::isfinite(mt)) {
        // Second-order correction with the same factorization.
        const Eval et = evaluate(wt.head(n_), false);
        VectorXd rhs_soc = rhs;
        rhs_soc.tail(m_) = -(alpha * h + constraint_residual(et, wt));
        const VectorXd dsoc = solve_kkt(rhs_soc).head(nw_);
        const double a_soc = max_step(w_, dsoc, lw_, uw_, tau);
        const VectorXd ws = w_ + a_soc * dsoc;
        double fs = 0.0;
        const double ms = merit_at(ws, fs);
        if (dsoc.allFinite() && ms <= phi0 + kArmijo * alpha * std::min(slope, 0.0)) {
          w_new = ws;
          f_new = fs;
          accepted = true;
          ++trials;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Nonmonotone escape: take a short step so the iteration keeps moving.
      ++ls_failures;
      alpha = ls_failures % 2 == 0 ? alpha_max : 1e-2 * alpha_max;
      w_new = w_ + alpha * dw;
      f_new = evaluate(w_new.head(n_), false).f;
    } else {
      ls_failures = 0;
    }

    w_ = w_new;
    y_ += alpha * dy;
    zl_ += alpha_z * dzl;
    zu_ += alpha_z * dzu;
    for (int i = 0; i < nw_; ++i) {
      if (has_l_[i]) {
        const double sl = w_[i] - lw_[i];
        zl_[i] = std::max(std::min(zl_[i], kKappaSigma * mu / sl), mu / (kKappaSigma * sl));
      }
      if (has_u_[i]) {
        const double su = uw_[i] - w_[i];
        zu_[i] = std::max(std::min(zu_[i], kKappaSigma * mu / su), mu / (kKappaSigma * su));
      }
    }
    log_row(iter, f_new, mu, r0, alpha, alpha_z, delta_w, trials);
  }
}

}  // namespace

void NlpProblem::validate() const {
  if (n < 0 || m_eq < 0 || m_ineq < 0) throw std::invalid_argument("negative problem dimension");
  if (lower.size() != n || upper.size() != n || x0.size() != n) {
    throw std::invalid_argument("bounds or x0 have the wrong size");
  }
  if (!objective || !gradient) throw std::invalid_argument("objective and gradient are required");
  if (m_eq > 0 && (!eq || !eq_jacobian)) throw std::invalid_argument("equality callbacks missing");
  if (m_ineq > 0 && (!ineq || !ineq_jacobian)) throw std::invalid_argument("inequality callbacks missing");
  for (int i = 0; i < n; ++i) {
    if (!(lower[i] <= upper[i]) || std::isnan(lower[i]) || std::isnan(upper[i])) {
      throw std::invalid_argument("lower bound exceeds upper bound at " + std::to_string(i));
    }
  }
  if (!std::isfinite(objective(x0)) || !all_finite(gradient(x0))) {
    throw std::invalid_argument("objective not finite at x0");
  }
  if (gradient(x0).size() != n) throw std::invalid_argument("gradient has the wrong size");
  if (m_eq > 0) {
    const VectorXd c = eq(x0);
    const SparseMat J = eq_jacobian(x0);
    if (c.size() != m_eq || J.rows() != m_eq || J.cols() != n) throw std::invalid_argument("equality size mismatch");
    if (!all_finite(c) || !all_finite(J)) throw std::invalid_argument("equality constraints not finite at x0");
  }
  if (m_ineq > 0) {
    const VectorXd g = ineq(x0);
    const SparseMat J = ineq_jacobian(x0);
    if (g.size() != m_ineq || J.rows() != m_ineq || J.cols() != n) {
      throw std::invalid_argument("inequality size mismatch");
    }
    if (!all_finite(g) || !all_finite(J)) throw std::invalid_argument("inequality constraints not finite at x0");
  }
}

std::string_view to_string(NlpStatus status) {
  switch (status) {
    case NlpStatus::kOptimalLocal: return "OPTIMAL_LOCAL";
    case NlpStatus::kMaxIter: return "MAX_ITER";
    case NlpStatus::kInfeasibleDetected: return "INFEASIBLE_DETECTED";
    case NlpStatus::kNumericFailure: return "NUMERIC_FAILURE";
  }
  return "?";
}

double KktResiduals::worst() const { return std::max({stationarity, primal, complementarity, dual_sign}); }

NlpSolution solve(const NlpProblem& problem, const NlpOptions& options) {
  problem.validate();
  if (!(options.tol > 0.0) || options.max_iter < 0 || !(options.mu_init > 0.0)) {
    throw std::invalid_argument("invalid solver options");
  }
  Solver solver(problem, options);
  return solver.run();
}

}  // namespace cooplane
