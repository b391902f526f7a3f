#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

Kinematics integrate_accel(const std::function<double(double)>& accel, double T, double h,
                           double v0) {
  Kinematics k;
  k.vel = v0;
  k.accel = accel(0.0);
  if (!(T > 0.0)) return k;
  const int n = static_cast<int>(std::ceil(T / h));
  const double step = T / n;
  for (int i = 1; i <= n; ++i) {
    const double a = accel(i * step);
    const double v = k.vel + 0.5 * (k.accel + a) * step;
    k.pos += 0.5 * (k.vel + v) * step;
    k.vel = v;
    k.accel = a;
  }
  return k;
}

std::function<double(double)> lateral_accel(double t1, double t2, double t3, double t4,
                                            double t5, double J) {
  return [=](double t) {
    const double peak = J * t1;
    if (t < 0.0) return 0.0;
    if (t < t1) return J * t;
    if (t < t2) return peak;
    if (t < t3) return peak - J * (t - t2);
    if (t < t4) return -peak;
    if (t < t5) return -peak + J * (t - t4);
    return 0.0;
  };
}

std::function<double(double)> ramp_accel(double t6, double t7, double t8, double J) {
  return [=](double t) {
    if (t < 0.0) return 0.0;
    if (t < t6) return J * t;
    if (t < t7) return J * t6;
    if (t < t8) return J * t6 - J * (t - t7);
    return 0.0;
  };
}

std::array<Vec2, 4> rect_corners(const cooplane::VehicleState& s, double length, double width) {
  const double c = std::cos(s.psi), sn = std::sin(s.psi);
  const double hl = 0.5 * length, hw = 0.5 * width;
  const double local[4][2] = {{hl, -hw}, {hl, hw}, {-hl, hw}, {-hl, -hw}};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = {s.x + c * local[i][0] - sn * local[i][1], s.y + sn * local[i][0] + c * local[i][1]};
  }
  return out;
}

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p[0] - a[0] - t * dx, p[1] - a[1] - t * dy);
}

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross(c, d, a), d2 = cross(c, d, b);
  const double d3 = cross(a, b, c), d4 = cross(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

bool inside(const Vec2& p, const std::array<Vec2, 4>& q) {
  for (int i = 0; i < 4; ++i)
    if (cross(q[i], q[(i + 1) % 4], p) < 0) return false;
  return true;
}

}  // namespace

double polygon_distance(const std::array<Vec2, 4>& p, const std::array<Vec2, 4>& q) {
  if (inside(p[0], q) || inside(q[0], p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const Vec2 &a = p[i], &b = p[(i + 1) % 4];
    for (int j = 0; j < 4; ++j) {
      const Vec2 &c = q[j], &d = q[(j + 1) % 4];
      if (segments_cross(a, b, c, d)) return 0.0;
      best = std::min({best, point_segment(a, c, d), point_segment(b, c, d), point_segment(c, a, b),
                       point_segment(d, a, b)});
    }
  }
  return best;
}

double sampled_boundary_distance(const std::array<Vec2, 4>& p, const std::array<Vec2, 4>& q,
                                 int n) {
  auto sample = [n](const std::array<Vec2, 4>& r) {
    std::vector<Vec2> pts;
    for (int k = 0; k < n; ++k) {
      const double s = 4.0 * k / n;
      const int e = static_cast<int>(s);
      const double t = s - e;
      const Vec2 &a = r[e], &b = r[(e + 1) % 4];
      pts.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
    }
    return pts;
  };
  const auto ps = sample(p), qs = sample(q);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : ps)
    for (const auto& b : qs) best = std::min(best, std::hypot(a[0] - b[0], a[1] - b[1]));
  return best;
}

double idm(double v, double v0, double T, double s0, double a, double b, double delta,
           double v_lead, double gap) {
  const double s_star = s0 + v * T + v * (v - v_lead) / (2.0 * std::sqrt(a * b));
  return a * (1.0 - std::pow(v / v0, delta) - std::pow(s_star / gap, 2));
}

cooplane::VehicleState bicycle(const cooplane::VehicleState& s, double a, double delta,
                               double dt, double lf, double lr) {
  const double beta = std::atan(lr / (lf + lr) * std::tan(delta));
  cooplane::VehicleState n;
  n.x = s.x + dt * s.v * std::cos(s.psi + beta);
  n.y = s.y + dt * s.v * std::sin(s.psi + beta);
  n.psi = s.psi + dt * s.v / lr * std::sin(beta);
  n.v = s.v + dt * a;
  return n;
}

}  // namespace oracle
