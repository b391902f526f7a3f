#include "cooplane/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/LU>

namespace cooplane {
namespace {

using Vec2 = Eigen::Vector2d;

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

bool separated_on_axis(const std::array<Vec2, 4>& c1, const std::array<Vec2, 4>& c2, const Vec2& axis) {
  double lo1 = std::numeric_limits<double>::infinity(), hi1 = -lo1;
  double lo2 = lo1, hi2 = hi1;
  for (const auto& p : c1) {
    lo1 = std::min(lo1, axis.dot(p));
    hi1 = std::max(hi1, axis.dot(p));
  }
  for (const auto& p : c2) {
    lo2 = std::min(lo2, axis.dot(p));
    hi2 = std::max(hi2, axis.dot(p));
  }
  return hi1 < lo2 || hi2 < lo1;
}

// Cheapest nonnegative (m0, m1, m2, m3) with (m0 - m2) = alpha, (m1 - m3) = beta,
// against costs b; rows 0/2 and 1/3 of a rectangle are opposite normals.
Eigen::Vector4d paired_multipliers(double alpha, double beta) {
  return {std::max(alpha, 0.0), std::max(beta, 0.0), std::max(-alpha, 0.0), std::max(-beta, 0.0)};
}

struct DualPoint {
  DualCertificate cert;
  double value;
};

DualPoint dual_at(const OccupancyPolytope& r1, const OccupancyPolytope& r2, const Vec2& rho) {
  DualPoint d;
  d.cert.rho = rho;
  // A1' lambda = -rho and A2' mu = rho, using the orthonormal row pairs.
  d.cert.lambda = paired_multipliers(-rho.dot(r1.A.row(0)), -rho.dot(r1.A.row(1)));
  d.cert.mu = paired_multipliers(rho.dot(r2.A.row(0)), rho.dot(r2.A.row(1)));
  d.value = -r1.b.dot(d.cert.lambda) - r2.b.dot(d.cert.mu);
  return d;
}

Vec2 unit(double theta) { return {std::cos(theta), std::sin(theta)}; }

}  // namespace

bool OccupancyPolytope::contains(const Eigen::Vector2d& p, double tol) const {
  return ((A * p - b).array() <= tol).all();
}

std::array<Eigen::Vector2d, 4> OccupancyPolytope::corners() const {
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    const int j = (i + 1) % 4;
    Eigen::Matrix2d M;
    M.row(0) = A.row(i);
    M.row(1) = A.row(j);
    out[static_cast<std::size_t>(i)] = M.inverse() * Eigen::Vector2d(b(i), b(j));
  }
  return out;
}

OccupancyPolytope occupancy_polytope(const VehicleState& state, const VehicleGeometry& geom) {
  const double c = std::cos(state.psi);
  const double s = std::sin(state.psi);
  OccupancyPolytope r;
  r.A << c, s,   //
      -s, c,     //
      -c, -s,    //
      s, -c;
  r.b = Eigen::Vector4d(0.5 * geom.length, 0.5 * geom.width, 0.5 * geom.length, 0.5 * geom.width) +
        r.A * Eigen::Vector2d(state.x, state.y);
  r.source = state;
  r.geom = geom;
  return r;
}

double rect_distance(const OccupancyPolytope& r1, const OccupancyPolytope& r2) {
  const auto c1 = r1.corners();
  const auto c2 = r2.corners();
  bool separated = false;
  for (int i = 0; i < 2 && !separated; ++i) {
    separated = separated_on_axis(c1, c2, r1.A.row(i).transpose()) ||
                separated_on_axis(c1, c2, r2.A.row(i).transpose());
  }
  if (!separated) return 0.0;

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t j = (i + 1) % 4;
    for (const auto& p : c1) best = std::min(best, point_segment_distance(p, c2[i], c2[j]));
    for (const auto& p : c2) best = std::min(best, point_segment_distance(p, c1[i], c1[j]));
  }
  return best;
}

double CertificateResiduals::worst() const {
  return std::max({distance, stationarity_ego, stationarity_other, rho_norm, lambda_sign, mu_sign});
}

CertificateResiduals check_certificate(const OccupancyPolytope& r1, const OccupancyPolytope& r2,
                                       const DualCertificate& cert, double d_min) {
  CertificateResiduals res;
  res.distance = d_min + r1.b.dot(cert.lambda) + r2.b.dot(cert.mu);
  res.stationarity_ego = (r1.A.transpose() * cert.lambda + cert.rho).cwiseAbs().maxCoeff();
  res.stationarity_other = (r2.A.transpose() * cert.mu - cert.rho).cwiseAbs().maxCoeff();
  res.rho_norm = cert.rho.squaredNorm() - 1.0;
  res.lambda_sign = -cert.lambda.minCoeff();
  res.mu_sign = -cert.mu.minCoeff();
  return res;
}

CertificateSearchResult find_certificate(const OccupancyPolytope& r1, const OccupancyPolytope& r2) {
  constexpr int kGrid = 720;
  constexpr double kStep = 2.0 * std::numbers::pi / kGrid;
  double best_theta = 0.0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double theta = i * kStep;
    const double v = dual_at(r1, r2, unit(theta)).value;
    if (v > best_value) {
      best_value = v;
      best_theta = theta;
    }
  }

  // Golden-section refinement inside the bracketing grid cells.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_theta - kStep;
  double hi = best_theta + kStep;
  double m1 = hi - inv_phi * (hi - lo);
  double m2 = lo + inv_phi * (hi - lo);
  double f1 = dual_at(r1, r2, unit(m1)).value;
  double f2 = dual_at(r1, r2, unit(m2)).value;
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      lo = m1;
      m1 = m2;
      f1 = f2;
      m2 = lo + inv_phi * (hi - lo);
      f2 = dual_at(r1, r2, unit(m2)).value;
    } else {
      hi = m2;
      m2 = m1;
      f2 = f1;
      m1 = hi - inv_phi * (hi - lo);
      f1 = dual_at(r1, r2, unit(m1)).value;
    }
  }
  DualPoint refined = dual_at(r1, r2, unit(0.5 * (lo + hi)));
  if (refined.value < best_value) refined = dual_at(r1, r2, unit(best_theta));

  CertificateSearchResult out;
  if (refined.value <= 0.0) {
    // Overlapping footprints: the dual optimum is the origin.
    out.dual_value = 0.0;
    return out;
  }
  out.certificate = refined.cert;
  out.dual_value = refined.value;
  return out;
}

}  // namespace cooplane
