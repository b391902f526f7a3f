#include "cooplane/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cooplane {
namespace {

using Eigen::Matrix4d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector4d;
using Eigen::VectorXd;
using Mat42 = Eigen::Matrix<double, 4, 2>;
using Mat4X = Eigen::Matrix<double, 4, Eigen::Dynamic>;
using Triplets = std::vector<Eigen::Triplet<double>>;

Vector4d as_vec(const VehicleState& s) { return {s.x, s.y, s.psi, s.v}; }
VehicleState as_state(const Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }

// Rows of A(psi) and its derivative.
Mat42 rot_rows(double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  Mat42 A;
  A << c, s, -s, c, -c, -s, s, -c;
  return A;
}

Mat42 rot_rows_dpsi(double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  Mat42 A;
  A << -s, c, -c, -s, s, -c, c, s;
  return A;
}

struct StateBound {
  int step;
  int comp;
  double bound;
  bool lower;
};

std::vector<StateBound> state_bounds(const MpcInstance& in) {
  std::vector<StateBound> out;
  const Vector4d lo = as_vec(in.limits.state_min), hi = as_vec(in.limits.state_max);
  for (int i = 1; i <= in.cfg.horizon; ++i) {
    for (int c = 0; c < 4; ++c) {
      if (std::abs(lo[c]) < 1e8) out.push_back({i, c, lo[c], true});
      if (std::abs(hi[c]) < 1e8) out.push_back({i, c, hi[c], false});
    }
  }
  return out;
}

// Forward simulation of the controls in z with state sensitivities.
struct Shot {
  VectorXd u;
  std::vector<Vector4d> s;   // M + 1
  std::vector<Mat4X> S;      // ds_i / du, 4 x 2M
  std::vector<StepJacobians> J;
};

class MpcFunctions {
 public:
  explicit MpcFunctions(std::shared_ptr<const MpcInstance> in) : in_(std::move(in)) {
    M_ = in_->cfg.horizon;
    nu_ = 2 * M_;
    nb_ = static_cast<int>(in_->blocks.size());
    bounds_ = state_bounds(*in_);
    n_ = nu_ + 10 * nb_;
    m_eq_ = 4 * nb_;
    m_in_ = 2 * nb_ + static_cast<int>(bounds_.size()) + 4 * M_;
    const Vector4d q = in_->cfg.q_state;
    q2_ = q.cwiseProduct(q);
    for (const auto& o : in_->obstacles) {
      std::vector<OccupancyPolytope> polys;
      for (const auto& s : o.states) polys.push_back(occupancy_polytope(s, o.geom));
      obstacle_polys_.push_back(std::move(polys));
    }
    const auto& g = in_->geom;
    half_ << 0.5 * g.length, 0.5 * g.width, 0.5 * g.length, 0.5 * g.width;
  }

  int n() const { return n_; }
  int m_eq() const { return m_eq_; }
  int m_in() const { return m_in_; }

  const Shot& shot(const VectorXd& z) const {
    if (cache_.u.size() == nu_ && cache_.u == z.head(nu_)) return cache_;
    cache_.u = z.head(nu_);
    cache_.s.assign(M_ + 1, Vector4d::Zero());
    cache_.S.assign(M_ + 1, Mat4X::Zero(4, nu_));
    cache_.J.resize(M_);
    cache_.s[0] = as_vec(in_->x0);
    for (int i = 0; i < M_; ++i) {
      const ControlInput u{z[2 * i], z[2 * i + 1]};
      const VehicleState si = as_state(cache_.s[i]);
      cache_.J[i] = kinematic_jacobians(si, u, in_->cfg.dt, in_->geom);
      cache_.s[i + 1] = as_vec(kinematic_step(si, u, in_->cfg.dt, in_->geom));
      cache_.S[i + 1] = cache_.J[i].A * cache_.S[i];
      cache_.S[i + 1].middleCols(2 * i, 2) += cache_.J[i].B;
    }
    return cache_;
  }

  double objective(const VectorXd& z) const {
    const Shot& sh = shot(z);
    double f = 0.0;
    for (int i = 1; i <= M_; ++i) {
      const Vector4d e = sh.s[i] - as_vec(in_->ref[i]);
      f += e.cwiseProduct(e).dot(q2_);
    }
    const Vector2d qu2 = in_->cfg.q_u.cwiseProduct(in_->cfg.q_u);
    const Vector2d qd2 = in_->cfg.q_du.cwiseProduct(in_->cfg.q_du);
    Vector2d prev(in_->u_prev.a, in_->u_prev.delta);
    for (int i = 0; i < M_; ++i) {
      const Vector2d u = z.segment<2>(2 * i);
      f += u.cwiseProduct(u).dot(qu2) + (u - prev).cwiseProduct(u - prev).dot(qd2);
      prev = u;
    }
    return f;
  }

  VectorXd gradient(const VectorXd& z) const {
    const Shot& sh = shot(z);
    VectorXd g = VectorXd::Zero(n_);
    for (int i = 1; i <= M_; ++i) {
      const Vector4d e = sh.s[i] - as_vec(in_->ref[i]);
      g.head(nu_) += sh.S[i].transpose() * (2.0 * q2_.cwiseProduct(e));
    }
    const Vector2d qu2 = in_->cfg.q_u.cwiseProduct(in_->cfg.q_u);
    const Vector2d qd2 = in_->cfg.q_du.cwiseProduct(in_->cfg.q_du);
    Vector2d prev(in_->u_prev.a, in_->u_prev.delta);
    for (int i = 0; i < M_; ++i) {
      const Vector2d u = z.segment<2>(2 * i);
      g.segment<2>(2 * i) += 2.0 * qu2.cwiseProduct(u) + 2.0 * qd2.cwiseProduct(u - prev);
      if (i > 0) g.segment<2>(2 * (i - 1)) -= 2.0 * qd2.cwiseProduct(u - prev);
      prev = u;
    }
    return g;
  }

  VectorXd eq(const VectorXd& z) const {
    const Shot& sh = shot(z);
    VectorXd c(m_eq_);
    for (int b = 0; b < nb_; ++b) {
      const auto [o, i] = in_->blocks[b];
      const int off = nu_ + 10 * b;
      const Vector4d lam = z.segment<4>(off), mu = z.segment<4>(off + 4);
      const Vector2d rho = z.segment<2>(off + 8);
      c.segment<2>(4 * b) = rot_rows(sh.s[i][2]).transpose() * lam + rho;
      c.segment<2>(4 * b + 2) = obstacle_polys_[o][i].A.transpose() * mu - rho;
    }
    return c;
  }

  SparseMat eq_jacobian(const VectorXd& z) const {
    const Shot& sh = shot(z);
    Triplets t;
    for (int b = 0; b < nb_; ++b) {
      const auto [o, i] = in_->blocks[b];
      const int off = nu_ + 10 * b;
      const Vector4d lam = z.segment<4>(off);
      const double psi = sh.s[i][2];
      const Vector2d dpsi = rot_rows_dpsi(psi).transpose() * lam;
      const Mat42 A = rot_rows(psi);
      const Mat42& A2 = obstacle_polys_[o][i].A;
      for (int r = 0; r < 2; ++r) {
        const int row = 4 * b + r;
        for (int j = 0; j < 2 * i; ++j) t.emplace_back(row, j, dpsi[r] * sh.S[i](2, j));
        for (int k = 0; k < 4; ++k) t.emplace_back(row, off + k, A(k, r));
        t.emplace_back(row, off + 8 + r, 1.0);
        const int row2 = 4 * b + 2 + r;
        for (int k = 0; k < 4; ++k) t.emplace_back(row2, off + 4 + k, A2(k, r));
        t.emplace_back(row2, off + 8 + r, -1.0);
      }
    }
    SparseMat J(m_eq_, n_);
    J.setFromTriplets(t.begin(), t.end());
    return J;
  }

  VectorXd ineq(const VectorXd& z) const {
    const Shot& sh = shot(z);
    VectorXd g(m_in_);
    for (int b = 0; b < nb_; ++b) {
      const auto [o, i] = in_->blocks[b];
      const int off = nu_ + 10 * b;
      const Vector4d lam = z.segment<4>(off), mu = z.segment<4>(off + 4);
      const Vector2d rho = z.segment<2>(off + 8);
      const Vector4d b1 = half_ + rot_rows(sh.s[i][2]) * sh.s[i].head<2>();
      g[2 * b] = -b1.dot(lam) - obstacle_polys_[o][i].b.dot(mu) - in_->cfg.d_min;
      g[2 * b + 1] = 1.0 - rho.squaredNorm();
    }
    int row = 2 * nb_;
    for (const auto& sb : bounds_) {
      const double v = sh.s[sb.step][sb.comp];
      g[row++] = sb.lower ? v - sb.bound : sb.bound - v;
    }
    const Vector2d dmin(in_->limits.du_min.a, in_->limits.du_min.delta);
    const Vector2d dmax(in_->limits.du_max.a, in_->limits.du_max.delta);
    Vector2d prev(in_->u_prev.a, in_->u_prev.delta);
    for (int i = 0; i < M_; ++i) {
      const Vector2d d = z.segment<2>(2 * i) - prev;
      for (int c = 0; c < 2; ++c) {
        g[row++] = d[c] - dmin[c];
        g[row++] = dmax[c] - d[c];
      }
      prev = z.segment<2>(2 * i);
    }
    return g;
  }

  SparseMat ineq_jacobian(const VectorXd& z) const {
    const Shot& sh = shot(z);
    Triplets t;
    for (int b = 0; b < nb_; ++b) {
      const auto [o, i] = in_->blocks[b];
      const int off = nu_ + 10 * b;
      const Vector4d lam = z.segment<4>(off);
      const Vector2d rho = z.segment<2>(off + 8);
      const double psi = sh.s[i][2];
      const Vector2d p = sh.s[i].head<2>();
      const Mat42 A = rot_rows(psi);
      const Vector2d dp = -A.transpose() * lam;
      const double dpsi = -lam.dot(rot_rows_dpsi(psi) * p);
      for (int j = 0; j < 2 * i; ++j) {
        t.emplace_back(2 * b, j, dp[0] * sh.S[i](0, j) + dp[1] * sh.S[i](1, j) + dpsi * sh.S[i](2, j));
      }
      const Vector4d b1 = half_ + A * p;
      for (int k = 0; k < 4; ++k) {
        t.emplace_back(2 * b, off + k, -b1[k]);
        t.emplace_back(2 * b, off + 4 + k, -obstacle_polys_[o][i].b[k]);
      }
      t.emplace_back(2 * b + 1, off + 8, -2.0 * rho[0]);
      t.emplace_back(2 * b + 1, off + 9, -2.0 * rho[1]);
    }
    int row = 2 * nb_;
    for (const auto& sb : bounds_) {
      const double sign = sb.lower ? 1.0 : -1.0;
      for (int j = 0; j < 2 * sb.step; ++j) t.emplace_back(row, j, sign * sh.S[sb.step](sb.comp, j));
      ++row;
    }
    for (int i = 0; i < M_; ++i) {
      for (int c = 0; c < 2; ++c) {
        for (double sign : {1.0, -1.0}) {
          t.emplace_back(row, 2 * i + c, sign);
          if (i > 0) t.emplace_back(row, 2 * (i - 1) + c, -sign);
          ++row;
        }
      }
    }
    SparseMat J(m_in_, n_);
    J.setFromTriplets(t.begin(), t.end());
    return J;
  }

  SparseMat hessian(const VectorXd& z, const VectorXd& y_eq, const VectorXd& y_in) const {
    const Shot sh = shot(z);  // copy: the FD sweep below reuses the cache
    // State gradient g_i and Hessian H_i of the Lagrangian terms at step i.
    std::vector<Vector4d> gs(M_ + 1, Vector4d::Zero());
    std::vector<Matrix4d> Hs(M_ + 1, Matrix4d::Zero());
    std::vector<Matrix4d> cross(nb_);  // d2L / ds dlambda per block
    for (int i = 1; i <= M_; ++i) {
      gs[i] = 2.0 * q2_.cwiseProduct(sh.s[i] - as_vec(in_->ref[i]));
      Hs[i].diagonal() = 2.0 * q2_;
    }
    int row = 2 * nb_;
    for (const auto& sb : bounds_) {
      gs[sb.step][sb.comp] += sb.lower ? -y_in[row] : y_in[row];
      ++row;
    }
    for (int b = 0; b < nb_; ++b) {
      const int i = in_->blocks[b].second;
      const int off = nu_ + 10 * b;
      const Vector4d lam = z.segment<4>(off);
      const double yd = y_in[2 * b];
      const Vector2d ye = y_eq.segment<2>(4 * b);
      const double psi = sh.s[i][2];
      const Vector2d p = sh.s[i].head<2>();
      const Mat42 A = rot_rows(psi), Ad = rot_rows_dpsi(psi);
      gs[i].head<2>() += yd * A.transpose() * lam;
      gs[i][2] += yd * lam.dot(Ad * p) - lam.dot(Ad * ye);
      const Vector2d hp = yd * Ad.transpose() * lam;
      Hs[i].block<2, 1>(0, 2) += hp;
      Hs[i].block<1, 2>(2, 0) += hp.transpose();
      Hs[i](2, 2) += -yd * lam.dot(A * p) + lam.dot(A * ye);
      Matrix4d C = Matrix4d::Zero();
      C.block<2, 4>(0, 0) = yd * A.transpose();
      C.row(2) = (yd * (Ad * p) - Ad * ye).transpose();
      cross[b] = C;
    }

    MatrixXd Huu = MatrixXd::Zero(nu_, nu_);
    for (int i = 1; i <= M_; ++i) Huu += sh.S[i].transpose() * Hs[i] * sh.S[i];
    Huu += shooting_curvature(z.head(nu_), gs);
    const Vector2d qu2 = in_->cfg.q_u.cwiseProduct(in_->cfg.q_u);
    const Vector2d qd2 = in_->cfg.q_du.cwiseProduct(in_->cfg.q_du);
    for (int i = 0; i < M_; ++i) {
      for (int c = 0; c < 2; ++c) {
        const int k = 2 * i + c;
        Huu(k, k) += 2.0 * qu2[c] + 2.0 * qd2[c];
        if (i > 0) {
          Huu(k - 2, k - 2) += 2.0 * qd2[c];
          Huu(k, k - 2) -= 2.0 * qd2[c];
          Huu(k - 2, k) -= 2.0 * qd2[c];
        }
      }
    }

    Triplets t;
    for (int j = 0; j < nu_; ++j)
      for (int r = j; r < nu_; ++r) t.emplace_back(r, j, Huu(r, j));
    for (int b = 0; b < nb_; ++b) {
      const int i = in_->blocks[b].second;
      const int off = nu_ + 10 * b;
      const MatrixXd X = cross[b].transpose() * sh.S[i];  // 4 x 2M
      for (int k = 0; k < 4; ++k)
        for (int j = 0; j < 2 * i; ++j) t.emplace_back(off + k, j, X(k, j));
      const double yr = y_in[2 * b + 1];
      t.emplace_back(off + 8, off + 8, 2.0 * yr);
      t.emplace_back(off + 9, off + 9, 2.0 * yr);
    }
    SparseMat H(n_, n_);
    H.setFromTriplets(t.begin(), t.end());
    return H;
  }

  // Hessian of sum_i g_i' s_i(u) with g_i held fixed: central differences of
  // its adjoint gradient.
  MatrixXd shooting_curvature(const VectorXd& u, const std::vector<Vector4d>& gs) const {
    MatrixXd H(nu_, nu_);
    VectorXd up = u;
    for (int j = 0; j < nu_; ++j) {
      const double h = 1e-5;
      up[j] = u[j] + h;
      const VectorXd gp = adjoint_gradient(up, gs);
      up[j] = u[j] - h;
      const VectorXd gm = adjoint_gradient(up, gs);
      up[j] = u[j];
      H.col(j) = (gp - gm) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
  }

  VectorXd adjoint_gradient(const VectorXd& u, const std::vector<Vector4d>& gs) const {
    std::vector<StepJacobians> J(M_);
    VehicleState s = in_->x0;
    for (int i = 0; i < M_; ++i) {
      const ControlInput ui{u[2 * i], u[2 * i + 1]};
      J[i] = kinematic_jacobians(s, ui, in_->cfg.dt, in_->geom);
      s = kinematic_step(s, ui, in_->cfg.dt, in_->geom);
    }
    VectorXd grad(nu_);
    Vector4d lam = gs[M_];
    for (int i = M_ - 1; i >= 0; --i) {
      grad.segment<2>(2 * i) = J[i].B.transpose() * lam;
      lam = gs[i] + J[i].A.transpose() * lam;
    }
    return grad;
  }

 private:
  std::shared_ptr<const MpcInstance> in_;
  int M_ = 0, nu_ = 0, nb_ = 0, n_ = 0, m_eq_ = 0, m_in_ = 0;
  Vector4d q2_;
  Vector4d half_;
  std::vector<StateBound> bounds_;
  std::vector<std::vector<OccupancyPolytope>> obstacle_polys_;
  mutable Shot cache_;
};

constexpr double kInfDistance = std::numeric_limits<double>::infinity();
// Unconstrained obstacle-step pairs closer than d_min plus this get a block.
constexpr double kLazyMargin = 0.2;
constexpr double kRhoShrink = 0.95;

void extend_states(std::vector<VehicleState>& states, std::size_t size, double dt) {
  while (states.size() < size) {
    VehicleState s = states.back();
    s.x += dt * s.v * std::cos(s.psi);
    s.y += dt * s.v * std::sin(s.psi);
    states.push_back(s);
  }
}

}  // namespace

VehicleState kinematic_step(const VehicleState& s, const ControlInput& u, double dt,
                            const VehicleGeometry& g) {
  const double beta = std::atan(g.lr / (g.lf + g.lr) * std::tan(u.delta));
  VehicleState n;
  n.x = s.x + dt * s.v * std::cos(s.psi + beta);
  n.y = s.y + dt * s.v * std::sin(s.psi + beta);
  n.psi = s.psi + dt * s.v / g.lr * std::sin(beta);
  n.v = s.v + dt * u.a;
  return n;
}

StepJacobians kinematic_jacobians(const VehicleState& s, const ControlInput& u, double dt,
                                  const VehicleGeometry& g) {
  const double r = g.lr / (g.lf + g.lr);
  const double tan_d = std::tan(u.delta);
  const double beta = std::atan(r * tan_d);
  const double dbeta = r * (1.0 + tan_d * tan_d) / (1.0 + r * r * tan_d * tan_d);
  const double c = std::cos(s.psi + beta), sn = std::sin(s.psi + beta);
  StepJacobians J;
  J.A.setIdentity();
  J.A(0, 2) = -dt * s.v * sn;
  J.A(0, 3) = dt * c;
  J.A(1, 2) = dt * s.v * c;
  J.A(1, 3) = dt * sn;
  J.A(2, 3) = dt * std::sin(beta) / g.lr;
  J.B.setZero();
  J.B(3, 0) = dt;
  J.B(0, 1) = -dt * s.v * sn * dbeta;
  J.B(1, 1) = dt * s.v * c * dbeta;
  J.B(2, 1) = dt * s.v / g.lr * std::cos(beta) * dbeta;
  return J;
}

void MpcConfig::validate() const {
  if (horizon < 2) throw std::invalid_argument("MPC horizon must be >= 2");
  if (!(dt > 0.0)) throw std::invalid_argument("MPC dt must be positive");
  if ((q_state.array() < 0.0).any() || (q_u.array() < 0.0).any() || (q_du.array() < 0.0).any()) {
    throw std::invalid_argument("MPC weights must be non-negative");
  }
  if (!(d_min > 0.0)) throw std::invalid_argument("d_min must be positive");
  if (max_obstacles < 0) throw std::invalid_argument("max_obstacles must be non-negative");
}

std::vector<VehicleState> MpcProblem::rollout(const VectorXd& z) const {
  std::vector<VehicleState> out{instance->x0};
  for (int i = 0; i < instance->cfg.horizon; ++i) {
    out.push_back(kinematic_step(out.back(), {z[2 * i], z[2 * i + 1]}, instance->cfg.dt, instance->geom));
  }
  return out;
}

DualCertificate MpcProblem::certificate(const VectorXd& z, int block) const {
  const int off = block_offset(block);
  DualCertificate c;
  c.lambda = z.segment<4>(off);
  c.mu = z.segment<4>(off + 4);
  c.rho = z.segment<2>(off + 8);
  return c;
}

namespace {

// Dual block b set to the best certificate between the pose the controls in
// z reach and the obstacle, floored at dual_init to stay off the bounds.
void certificate_duals(const MpcProblem& p, VectorXd& z, int block) {
  const auto& in = *p.instance;
  const auto [o, i] = in.blocks[static_cast<std::size_t>(block)];
  const auto states = p.rollout(z);
  const auto& os = in.obstacles[static_cast<std::size_t>(o)];
  const auto cert = find_certificate(occupancy_polytope(states[static_cast<std::size_t>(i)], in.geom),
                                     occupancy_polytope(os.states[static_cast<std::size_t>(i)], os.geom))
                        .certificate;
  const int off = p.block_offset(block);
  z.segment<4>(off) = cert.lambda.array().max(in.cfg.dual_init);
  z.segment<4>(off + 4) = cert.mu.array().max(in.cfg.dual_init);
  z.segment<2>(off + 8) = cert.rho * kRhoShrink;
}

}  // namespace

MpcProblem build_mpc_problem(MpcInstance instance) {
  instance.cfg.validate();
  validate(instance.x0);
  const int M = instance.cfg.horizon;
  if (static_cast<int>(instance.ref.size()) != M + 1) throw std::invalid_argument("reference must hold M + 1 states");
  for (const auto& o : instance.obstacles) {
    if (static_cast<int>(o.states.size()) < M + 1) throw std::invalid_argument("obstacle prediction shorter than M + 1");
  }
  for (const auto& [o, i] : instance.blocks) {
    if (o < 0 || o >= static_cast<int>(instance.obstacles.size()) || i < 1 || i > M) {
      throw std::invalid_argument("dual block out of range");
    }
  }
  auto in = std::make_shared<const MpcInstance>(std::move(instance));
  auto fn = std::make_shared<MpcFunctions>(in);

  MpcProblem p;
  p.instance = in;
  NlpProblem& nlp = p.nlp;
  nlp.n = fn->n();
  nlp.m_eq = fn->m_eq();
  nlp.m_ineq = fn->m_in();
  const double inf = std::numeric_limits<double>::infinity();
  nlp.lower = VectorXd::Constant(nlp.n, -inf);
  nlp.upper = VectorXd::Constant(nlp.n, inf);
  for (int i = 0; i < M; ++i) {
    nlp.lower[2 * i] = in->limits.u_min.a;
    nlp.upper[2 * i] = in->limits.u_max.a;
    nlp.lower[2 * i + 1] = in->limits.u_min.delta;
    nlp.upper[2 * i + 1] = in->limits.u_max.delta;
  }
  const int nb = static_cast<int>(in->blocks.size());
  for (int b = 0; b < nb; ++b) nlp.lower.segment<8>(2 * M + 10 * b).setZero();

  nlp.x0 = VectorXd::Zero(nlp.n);
  for (int i = 0; i < M; ++i) {
    nlp.x0[2 * i] = std::clamp(in->u_prev.a, in->limits.u_min.a, in->limits.u_max.a);
    nlp.x0[2 * i + 1] = std::clamp(in->u_prev.delta, in->limits.u_min.delta, in->limits.u_max.delta);
  }
  for (int b = 0; b < nb; ++b) certificate_duals(p, nlp.x0, b);

  nlp.objective = [fn](const VectorXd& z) { return fn->objective(z); };
  nlp.gradient = [fn](const VectorXd& z) { return fn->gradient(z); };
  nlp.eq = [fn](const VectorXd& z) { return fn->eq(z); };
  nlp.eq_jacobian = [fn](const VectorXd& z) { return fn->eq_jacobian(z); };
  nlp.ineq = [fn](const VectorXd& z) { return fn->ineq(z); };
  nlp.ineq_jacobian = [fn](const VectorXd& z) { return fn->ineq_jacobian(z); };
  nlp.hessian = [fn](const VectorXd& z, const VectorXd& ye, const VectorXd& yi) { return fn->hessian(z, ye, yi); };
  return p;
}

std::vector<MpcObstacle> obstacles_from(const PredictionResult& predictions, std::size_t offset, int horizon) {
  std::vector<MpcObstacle> out;
  for (const auto& v : predictions.vehicles) {
    MpcObstacle o;
    o.id = v.id;
    o.geom = v.geom;
    const auto states = v.trajectory.states();
    const std::size_t first = std::min(offset, states.size() - 1);
    const std::size_t last = std::min(states.size(), offset + static_cast<std::size_t>(horizon) + 1);
    o.states.assign(states.begin() + static_cast<std::ptrdiff_t>(first), states.begin() + static_cast<std::ptrdiff_t>(last));
    if (v.stationary) {
      o.states.resize(static_cast<std::size_t>(horizon) + 1, o.states.front());
    } else {
      extend_states(o.states, static_cast<std::size_t>(horizon) + 1, v.trajectory.dt());
    }
    out.push_back(std::move(o));
  }
  return out;
}

MpcProblem build_mpc_problem(const VehicleState& x0, const ControlInput& u_prev, const Trajectory& ref,
                             const PredictionResult& predictions, const VehicleGeometry& geom,
                             const MotionLimits& limits, const MpcConfig& cfg) {
  MpcInstance in;
  in.x0 = x0;
  in.u_prev = u_prev;
  if (ref.size() < static_cast<std::size_t>(cfg.horizon) + 1) throw std::invalid_argument("reference shorter than M + 1");
  in.ref.assign(ref.states().begin(), ref.states().begin() + cfg.horizon + 1);
  for (auto& o : obstacles_from(predictions, 0, cfg.horizon)) {
    if (std::abs(o.states.front().x - x0.x) <= cfg.obstacle_range) in.obstacles.push_back(std::move(o));
  }
  for (int o = 0; o < static_cast<int>(in.obstacles.size()); ++o)
    for (int i = 1; i <= cfg.horizon; ++i) in.blocks.emplace_back(o, i);
  in.geom = geom;
  in.limits = limits;
  in.cfg = cfg;
  return build_mpc_problem(std::move(in));
}

ControlInput fallback_control(const VehicleState& state, const ControlInput& u_prev, const MotionLimits& limits,
                              const MpcConfig& cfg) {
  ControlInput u;
  u.delta = std::clamp(u_prev.delta, limits.u_min.delta, limits.u_max.delta);
  u.a = std::clamp(cfg.fallback_brake, u_prev.a + limits.du_min.a, u_prev.a + limits.du_max.a);
  u.a = std::clamp(u.a, limits.u_min.a, limits.u_max.a);
  u.a = std::max(u.a, -state.v / cfg.dt);
  return u;
}

MpcPlanner::MpcPlanner(VehicleGeometry geom, MotionLimits limits, MpcConfig cfg)
    : geom_(geom), limits_(limits), cfg_(std::move(cfg)) {
  cfg_.validate();
  validate(limits_);
}

void MpcPlanner::reset() {
  prev_controls_.clear();
  prev_plan_.clear();
  prev_duals_.clear();
}

PlanStepResult MpcPlanner::step(const VehicleState& x0, const ControlInput& u_prev, const Trajectory& ref,
                                std::vector<MpcObstacle> obstacles) {
  const auto t0 = std::chrono::steady_clock::now();
  const int M = cfg_.horizon;
  const auto Mz = static_cast<std::size_t>(M);
  if (ref.size() < Mz + 1) throw std::invalid_argument("reference shorter than M + 1");

  // Range pruning, nearest first.
  std::erase_if(obstacles, [&](const MpcObstacle& o) {
    return o.states.empty() || std::abs(o.states.front().x - x0.x) > cfg_.obstacle_range;
  });
  std::stable_sort(obstacles.begin(), obstacles.end(), [&](const MpcObstacle& a, const MpcObstacle& b) {
    return std::hypot(a.states[0].x - x0.x, a.states[0].y - x0.y) <
           std::hypot(b.states[0].x - x0.x, b.states[0].y - x0.y);
  });
  if (static_cast<int>(obstacles.size()) > cfg_.max_obstacles) obstacles.resize(static_cast<std::size_t>(cfg_.max_obstacles));
  for (auto& o : obstacles) extend_states(o.states, Mz + 1, cfg_.dt);
  std::vector<std::vector<OccupancyPolytope>> obstacle_polys;
  for (const auto& o : obstacles) {
    std::vector<OccupancyPolytope> polys;
    for (std::size_t i = 0; i <= Mz; ++i) polys.push_back(occupancy_polytope(o.states[i], o.geom));
    obstacle_polys.push_back(std::move(polys));
  }

  // Initial controls: previous plan shifted by one step.
  std::vector<ControlInput> shifted;
  for (std::size_t i = 1; i < prev_controls_.size(); ++i) shifted.push_back(prev_controls_[i]);
  if (shifted.empty()) shifted.push_back(u_prev);
  while (shifted.size() < Mz) shifted.push_back(shifted.back());

  // Duals keyed by (obstacle id, step) so they survive re-indexing.
  std::map<std::pair<int, int>, Eigen::Matrix<double, 10, 1>> warm;
  for (const auto& [key, d] : prev_duals_) warm[{key.first, key.second - 1}] = d;

  struct Attempt {
    MpcProblem problem;
    NlpSolution sol;
    std::vector<VehicleState> planned;
    std::vector<std::vector<double>> dist;  // [obstacle][step]
    double min_d = kInfDistance;
    bool usable = false;
  };
  int iterations = 0;

  auto attempt = [&](const std::vector<ControlInput>& guess_u, std::map<std::pair<int, int>, Eigen::Matrix<double, 10, 1>> duals) {
    std::vector<VehicleState> guess{x0};
    for (std::size_t i = 0; i < Mz; ++i) guess.push_back(kinematic_step(guess.back(), guess_u[i], cfg_.dt, geom_));

    MpcInstance in;
    in.x0 = x0;
    in.u_prev = u_prev;
    in.ref.assign(ref.states().begin(), ref.states().begin() + M + 1);
    in.obstacles = obstacles;
    in.geom = geom_;
    in.limits = limits_;
    in.cfg = cfg_;
    for (std::size_t o = 0; o < obstacles.size(); ++o) {
      for (std::size_t i = 1; i <= Mz; ++i) {
        const auto& os = obstacles[o].states[i];
        const double dg = std::hypot(os.x - guess[i].x, os.y - guess[i].y);
        const double dr = std::hypot(os.x - in.ref[i].x, os.y - in.ref[i].y);
        if (std::min(dg, dr) < cfg_.block_radius) in.blocks.emplace_back(static_cast<int>(o), static_cast<int>(i));
      }
    }

    Eigen::VectorXd z_controls(2 * M);
    for (std::size_t i = 0; i < Mz; ++i) {
      z_controls[2 * i] = std::clamp(guess_u[i].a, limits_.u_min.a, limits_.u_max.a);
      z_controls[2 * i + 1] = std::clamp(guess_u[i].delta, limits_.u_min.delta, limits_.u_max.delta);
    }

    Attempt a;
    constexpr int kMaxRounds = 3;
    for (int round = 0;; ++round) {
      a.problem = build_mpc_problem(in);
      Eigen::VectorXd& z0 = a.problem.nlp.x0;
      z0.head(2 * M) = z_controls;
      for (std::size_t b = 0; b < in.blocks.size(); ++b) {
        const auto [o, i] = in.blocks[b];
        auto it = duals.find({obstacles[static_cast<std::size_t>(o)].id, i});
        if (it != duals.end()) {
          z0.segment<10>(a.problem.block_offset(static_cast<int>(b))) = it->second;
        } else {
          certificate_duals(a.problem, z0, static_cast<int>(b));
        }
      }
      a.sol = solve(a.problem.nlp, cfg_.nlp);
      iterations += a.sol.iterations;
      a.planned = a.problem.rollout(a.sol.x);

      // Oracle distances between the plan and every obstacle, constrained or not.
      a.dist.assign(obstacles.size(), std::vector<double>(Mz + 1, kInfDistance));
      for (std::size_t o = 0; o < obstacles.size(); ++o)
        for (std::size_t i = 1; i <= Mz; ++i)
          a.dist[o][i] = rect_distance(occupancy_polytope(a.planned[i], geom_), obstacle_polys[o][i]);

      if (a.sol.status != NlpStatus::kOptimalLocal || round + 1 >= kMaxRounds) break;
      // Lazy constraints: pairs the pruning skipped but the plan comes close to.
      std::vector<std::pair<int, int>> missing;
      for (std::size_t o = 0; o < obstacles.size(); ++o) {
        for (std::size_t i = 1; i <= Mz; ++i) {
          const std::pair<int, int> key{static_cast<int>(o), static_cast<int>(i)};
          if (a.dist[o][i] < cfg_.d_min + kLazyMargin &&
              std::find(in.blocks.begin(), in.blocks.end(), key) == in.blocks.end()) {
            missing.push_back(key);
          }
        }
      }
      if (missing.empty()) break;
      in.blocks.insert(in.blocks.end(), missing.begin(), missing.end());
      z_controls = a.sol.x.head(2 * M);
      for (std::size_t b = 0; b + missing.size() < in.blocks.size(); ++b) {
        const auto [o, i] = in.blocks[b];
        duals[{obstacles[static_cast<std::size_t>(o)].id, i}] =
            a.sol.x.segment<10>(a.problem.block_offset(static_cast<int>(b)));
      }
    }

    for (const auto& row : a.dist)
      for (std::size_t i = 1; i <= Mz; ++i) a.min_d = std::min(a.min_d, row[i]);
    // Iterate limit with a feasible, safe iterate is still usable.
    a.usable = a.sol.status == NlpStatus::kOptimalLocal;
    if (a.sol.status == NlpStatus::kMaxIter && a.sol.x.allFinite()) {
      const KktResiduals check = kkt_residuals(a.problem.nlp, a.sol);
      a.usable = check.primal <= 1e-6 && a.min_d >= cfg_.d_min - 1e-3;
    }
    return a;
  };

  Attempt best = attempt(shifted, warm);
  if (!best.usable && !obstacles.empty()) {
    // Retry from a braking rollout that holds the steering, with cold duals.
    std::vector<ControlInput> brake;
    VehicleState s = x0;
    for (std::size_t i = 0; i < Mz; ++i) {
      const double a = s.v > 0.0 ? std::max(limits_.u_min.a, -0.999 * s.v / cfg_.dt) : 0.0;
      brake.push_back({a, std::clamp(shifted[i].delta, limits_.u_min.delta, limits_.u_max.delta)});
      s = kinematic_step(s, brake.back(), cfg_.dt, geom_);
    }
    Attempt retry = attempt(brake, {});
    if (retry.usable) best = std::move(retry);
  }
  const MpcProblem& problem = best.problem;
  const NlpSolution& sol = best.sol;
  const auto& planned = best.planned;

  PlanStepResult r;
  r.status = sol.status;
  r.iterations = iterations;
  const auto& blocks = problem.instance->blocks;
  r.blocks = static_cast<int>(blocks.size());
  const Eigen::VectorXd& z = sol.x;
  r.min_planned_distance = best.min_d;

  if (best.usable) {
    for (std::size_t i = 0; i < Mz; ++i) r.controls.push_back({z[2 * i], z[2 * i + 1]});
    r.u = r.controls.front();
    r.planned = planned;
    prev_duals_.clear();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto [o, i] = blocks[b];
      const auto& obs = obstacles[static_cast<std::size_t>(o)];
      const DualCertificate cert = problem.certificate(z, static_cast<int>(b));
      const auto res = check_certificate(occupancy_polytope(planned[static_cast<std::size_t>(i)], geom_),
                                         obstacle_polys[static_cast<std::size_t>(o)][static_cast<std::size_t>(i)],
                                         cert, cfg_.d_min);
      r.max_certificate_residual = std::max(r.max_certificate_residual, res.worst());
      r.duals[obs.id].emplace_back(i, cert);
      prev_duals_[{obs.id, i}] = z.segment<10>(problem.block_offset(static_cast<int>(b)));
    }
    prev_controls_ = r.controls;
    prev_plan_ = planned;
  } else {
    // Fallback candidates, rolled out open loop against this step's
    // predictions: the rest of the last accepted plan, braking with the
    // steering held, and braking while straightening the wheel.
    r.fallback = true;
    // Smallest predicted distance, then the step of first contact: when
    // every option collides, the one that collides later wins.
    auto clearance = [&](const std::vector<VehicleState>& path) {
      std::pair<double, std::size_t> c{kInfDistance, path.size()};
      for (std::size_t i = 1; i < path.size(); ++i)
        for (const auto& polys : obstacle_polys) {
          const double d = rect_distance(occupancy_polytope(path[i], geom_), polys[i]);
          c.first = std::min(c.first, d);
          if (d <= 0.0) c.second = std::min(c.second, i);
        }
      return c;
    };
    auto rollout = [&](const std::vector<ControlInput>& us) {
      std::vector<VehicleState> path{x0};
      for (const auto& u : us) path.push_back(kinematic_step(path.back(), u, cfg_.dt, geom_));
      return path;
    };
    auto braking = [&](bool straighten) {
      std::vector<ControlInput> us;
      VehicleState s = x0;
      ControlInput prev = u_prev;
      for (std::size_t i = 0; i < Mz; ++i) {
        ControlInput u = fallback_control(s, prev, limits_, cfg_);
        if (straighten) u.delta = std::clamp(0.0, prev.delta + limits_.du_min.delta, prev.delta + limits_.du_max.delta);
        us.push_back(u);
        s = kinematic_step(s, u, cfg_.dt, geom_);
        prev = u;
      }
      return us;
    };

    std::vector<std::vector<ControlInput>> options{braking(false), braking(true)};
    const bool has_tail = prev_controls_.size() > 1;
    if (has_tail) {
      std::vector<ControlInput> tail(prev_controls_.begin() + 1, prev_controls_.end());
      tail.front().a = std::max(tail.front().a, -x0.v / cfg_.dt);
      options.push_back(std::move(tail));
    }
    std::size_t pick = 0;
    std::pair<double, std::size_t> best_c{-1.0, 0};
    std::vector<std::vector<VehicleState>> paths;
    for (std::size_t c = 0; c < options.size(); ++c) {
      paths.push_back(rollout(options[c]));
      const auto cl = clearance(paths.back());
      if (cl.first > best_c.first + 1e-9 || (cl.first > best_c.first - 1e-9 && cl.second > best_c.second)) {
        pick = c;
        best_c = cl;
      }
    }
    r.controls = options[pick];
    r.u = r.controls.front();
    r.planned = paths[pick];
    if (pick == 2) {
      prev_controls_ = r.controls;
      prev_plan_ = r.planned;
      std::map<std::pair<int, int>, Eigen::Matrix<double, 10, 1>> duals;
      for (const auto& [key, d] : prev_duals_)
        if (key.second > 1) duals[{key.first, key.second - 1}] = d;
      prev_duals_ = std::move(duals);
    } else {
      reset();
    }
  }
  r.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

HorizonResult plan_horizon(const Trajectory& ref, const PredictionResult& predictions, const VehicleState& start,
                           const ControlInput& u_prev, const VehicleGeometry& geom, const MotionLimits& limits,
                           const MpcConfig& cfg, std::ostream* step_log) {
  const int M = cfg.horizon;
  if (ref.size() < static_cast<std::size_t>(M) + 1) throw std::invalid_argument("reference shorter than M + 1");
  const std::size_t last = ref.size() - 1 - static_cast<std::size_t>(M);
  MpcPlanner planner(geom, limits, cfg);
  HorizonResult out;
  std::vector<VehicleState> executed{start};
  VehicleState x = start;
  ControlInput u = u_prev;
  if (step_log) write_plan_log_header(*step_log);
  for (std::size_t k = 0; k <= last; ++k) {
    PlanStepResult r = planner.step(x, u, ref.slice(k, static_cast<std::size_t>(M) + 1), obstacles_from(predictions, k, M));
    if (step_log) write_plan_log_row(*step_log, ref.start_step() + static_cast<std::int64_t>(k), r);
    u = r.u;
    x = kinematic_step(x, u, cfg.dt, geom);
    executed.push_back(x);
    out.controls.push_back(u);
    if (r.fallback) ++out.fallbacks;
    out.steps.push_back(std::move(r));
  }
  out.executed = Trajectory(ref.start_step(), ref.dt(), std::move(executed));
  return out;
}

void write_plan_log_header(std::ostream& out) {
  out << "step,a,delta,status,fallback,iterations,blocks,solve_time,min_planned_distance,max_certificate_residual\n";
}

void write_plan_log_row(std::ostream& out, std::int64_t step, const PlanStepResult& r) {
  out << step << ',' << r.u.a << ',' << r.u.delta << ',' << to_string(r.status) << ',' << (r.fallback ? 1 : 0) << ','
      << r.iterations << ',' << r.blocks << ',' << r.solve_time << ',' << r.min_planned_distance << ','
      << r.max_certificate_residual << '\n';
}

}  // namespace cooplane
