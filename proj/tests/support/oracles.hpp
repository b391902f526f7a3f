#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library code it is meant to check.

#include <array>
#include <functional>
#include <vector>

#include "cooplane/core.hpp"

namespace oracle {

struct Kinematics {
  double accel = 0.0;
  double vel = 0.0;
  double pos = 0.0;
};

/// Trapezoidal-rule integration of a continuous acceleration signal over
/// [0, T] from velocity v0: velocity from acceleration, position from velocity.
Kinematics integrate_accel(const std::function<double(double)>& accel, double T, double h,
                           double v0 = 0.0);

/// Acceleration of the lateral double trapezoid, written out segment by
/// segment from its breakpoints and jerk J (peak J * t1).
std::function<double(double)> lateral_accel(double t1, double t2, double t3, double t4,
                                            double t5, double J);

/// Acceleration of a single trapezoid rising for t6, flat until t7, falling
/// until t8. Negative J gives the braking profile.
std::function<double(double)> ramp_accel(double t6, double t7, double t8, double J);

using Vec2 = std::array<double, 2>;

/// Rectangle corners from center, heading and size, counter-clockwise.
std::array<Vec2, 4> rect_corners(const cooplane::VehicleState& s, double length, double width);

/// Exact distance between two convex quadrilaterals: zero if they
/// intersect, otherwise the smallest of the 16 edge-to-edge distances.
double polygon_distance(const std::array<Vec2, 4>& p, const std::array<Vec2, 4>& q);

/// Smallest distance between n points sampled along each boundary.
double sampled_boundary_distance(const std::array<Vec2, 4>& p, const std::array<Vec2, 4>& q,
                                 int n);

/// Textbook IDM without clipping.
double idm(double v, double v0, double T, double s0, double a, double b, double delta,
           double v_lead, double gap);

/// Euler step of the kinematic bicycle about the center of gravity.
cooplane::VehicleState bicycle(const cooplane::VehicleState& s, double a, double delta,
                               double dt, double lf, double lr);

}  // namespace oracle
