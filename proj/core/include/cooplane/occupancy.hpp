#pragma once

#include <array>

#include <Eigen/Core>

#include "cooplane/core.hpp"

namespace cooplane {

/// Road footprint of a vehicle as {p : A p <= b}. Rows of A are the outward
/// unit normals (front, left, rear, right) of the rotated rectangle.
struct OccupancyPolytope {
  Eigen::Matrix<double, 4, 2> A;
  Eigen::Vector4d b;
  VehicleState source;
  VehicleGeometry geom;

  bool contains(const Eigen::Vector2d& p, double tol = 1e-12) const;
  /// Corners in counter-clockwise order, recovered from (A, b) alone.
  std::array<Eigen::Vector2d, 4> corners() const;
};

OccupancyPolytope occupancy_polytope(const VehicleState& state, const VehicleGeometry& geom);

/// Exact Euclidean distance between two rectangles, 0 when they intersect.
/// Plain computational geometry (separating axes plus vertex/edge
/// projections), so it can serve as an oracle for the dual certificates.
double rect_distance(const OccupancyPolytope& r1, const OccupancyPolytope& r2);

/// Dual variables proving dist(r1, r2) >= d_min.
struct DualCertificate {
  Eigen::Vector4d lambda = Eigen::Vector4d::Zero();
  Eigen::Vector4d mu = Eigen::Vector4d::Zero();
  Eigen::Vector2d rho = Eigen::Vector2d::Zero();
};

/// Violation of each certificate condition; zero or negative means satisfied.
struct CertificateResiduals {
  double distance = 0.0;   // d_min + b1'lambda + b2'mu
  double stationarity_ego = 0.0;    // |A1'lambda + rho|_inf
  double stationarity_other = 0.0;  // |A2'mu - rho|_inf
  double rho_norm = 0.0;   // rho'rho - 1
  double lambda_sign = 0.0;  // -min(lambda)
  double mu_sign = 0.0;      // -min(mu)

  double worst() const;
  bool valid(double tol = kDefaultTolerance) const { return worst() <= tol; }

  static constexpr double kDefaultTolerance = 1e-6;
};

CertificateResiduals check_certificate(const OccupancyPolytope& r1, const OccupancyPolytope& r2,
                                       const DualCertificate& cert, double d_min);

struct CertificateSearchResult {
  DualCertificate certificate;
  double dual_value = 0.0;  // -b1'lambda - b2'mu at the returned point
};

/// Maximizes the dual objective -b1'lambda - b2'mu over the certificate
/// constraints. For a fixed rho the optimal multipliers are available in
/// closed form, so the search runs over the direction of rho only.
CertificateSearchResult find_certificate(const OccupancyPolytope& r1, const OccupancyPolytope& r2);

}  // namespace cooplane
