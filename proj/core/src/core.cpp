#include "cooplane/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace cooplane {
namespace {

bool finite(double v) { return std::isfinite(v); }

// Ratio a/b if it is an integer up to round-off, otherwise -1.
std::int64_t integer_ratio(double a, double b) {
  const double r = a / b;
  const double rounded = std::round(r);
  if (rounded < 1.0 || std::abs(r - rounded) > 1e-9 * std::max(1.0, rounded)) return -1;
  return static_cast<std::int64_t>(rounded);
}

VehicleState lerp(const VehicleState& a, const VehicleState& b, double s) {
  const double dpsi = wrap_angle(b.psi - a.psi);
  return {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), a.psi + s * dpsi, a.v + s * (b.v - a.v)};
}

}  // namespace

void validate(const VehicleState& s) {
  if (!finite(s.x) || !finite(s.y) || !finite(s.psi) || !finite(s.v)) {
    throw std::invalid_argument("VehicleState has a non-finite component");
  }
  if (s.v < 0.0) throw std::invalid_argument("VehicleState speed is negative");
}

Trajectory::Trajectory(std::int64_t start_step, double dt, std::vector<VehicleState> states)
    : start_step_(start_step), dt_(dt), states_(std::move(states)) {
  if (!(dt_ > 0.0) || !finite(dt_)) throw std::invalid_argument("Trajectory dt must be positive");
  if (states_.empty()) throw std::invalid_argument("Trajectory must hold at least one state");
  for (const auto& s : states_) validate(s);
}

Trajectory Trajectory::slice(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > states_.size()) {
    throw std::out_of_range("Trajectory::slice out of range");
  }
  return Trajectory(start_step_ + static_cast<std::int64_t>(first), dt_,
                    std::vector<VehicleState>(states_.begin() + static_cast<std::ptrdiff_t>(first),
                                              states_.begin() + static_cast<std::ptrdiff_t>(first + count)));
}

void validate(const VehicleGeometry& g) {
  if (!(g.length > 0 && g.width > 0 && g.lf > 0 && g.lr > 0)) {
    throw std::invalid_argument("VehicleGeometry dimensions must be positive");
  }
  if (g.lf + g.lr > g.length) throw std::invalid_argument("VehicleGeometry wheelbase exceeds length");
}

RoadGeometry::RoadGeometry(int lane_count, double lane_width, double right_edge_y)
    : lane_count_(lane_count), lane_width_(lane_width), right_edge_(right_edge_y) {
  if (lane_count < 2) throw std::invalid_argument("RoadGeometry needs at least two lanes");
  if (!(lane_width > 0.0)) throw std::invalid_argument("RoadGeometry lane width must be positive");
}

double RoadGeometry::lane_center(int lane) const {
  if (!has_lane(lane)) throw std::out_of_range("lane index " + std::to_string(lane));
  return right_edge_ + (lane + 0.5) * lane_width_;
}

std::vector<double> RoadGeometry::lane_centers() const {
  std::vector<double> c;
  for (int i = 0; i < lane_count_; ++i) c.push_back(lane_center(i));
  return c;
}

Interval RoadGeometry::lane_interval(int lane) const {
  const double c = lane_center(lane);
  return {c - 0.5 * lane_width_, c + 0.5 * lane_width_};
}

int RoadGeometry::lane_of(double y) const {
  const int lane = static_cast<int>(std::floor((y - right_edge_) / lane_width_));
  return std::clamp(lane, 0, lane_count_ - 1);
}

MotionLimits MotionLimits::for_road(const RoadGeometry& road, const VehicleGeometry& geom) {
  MotionLimits limits;
  const Interval d = road.drivable();
  limits.state_min.y = d.lo + 0.5 * geom.width;
  limits.state_max.y = d.hi - 0.5 * geom.width;
  return limits;
}

void validate(const MotionLimits& m) {
  auto check = [](double lo, double hi, const char* what) {
    if (!(lo < hi)) throw std::invalid_argument(std::string("MotionLimits: empty range for ") + what);
  };
  check(m.state_min.x, m.state_max.x, "x");
  check(m.state_min.y, m.state_max.y, "y");
  check(m.state_min.psi, m.state_max.psi, "psi");
  check(m.state_min.v, m.state_max.v, "v");
  check(m.u_min.a, m.u_max.a, "a");
  check(m.u_min.delta, m.u_max.delta, "delta");
  check(m.du_min.a, m.du_max.a, "rate of a");
  check(m.du_min.delta, m.du_max.delta, "rate of delta");
  if (!(m.ay_max > 0 && m.day_max > 0 && m.ax_max > 0 && m.dax_max > 0)) {
    throw std::invalid_argument("MotionLimits: acceleration and jerk maxima must be positive");
  }
}

double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  angle = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (angle <= 0.0) angle += kTwoPi;
  return angle - std::numbers::pi;
}

Trajectory resample(const Trajectory& traj, double dt_new) {
  if (!(dt_new > 0.0)) throw std::invalid_argument("resample: dt must be positive");
  const double dt = traj.dt();
  const std::size_t n = traj.size();

  if (const auto up = integer_ratio(dt, dt_new); up >= 1) {
    // Finer grid: up new samples per old interval.
    std::vector<VehicleState> out;
    out.reserve((n - 1) * static_cast<std::size_t>(up) + 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::int64_t j = 0; j < up; ++j) {
        out.push_back(lerp(traj[i], traj[i + 1], static_cast<double>(j) / static_cast<double>(up)));
      }
    }
    out.push_back(traj.back());
    return Trajectory(traj.start_step() * up, dt_new, std::move(out));
  }

  const auto down = integer_ratio(dt_new, dt);
  if (down < 1) throw std::invalid_argument("resample: dt_new is not commensurate with dt");
  if (traj.start_step() % down != 0 || (n - 1) % static_cast<std::size_t>(down) != 0) {
    throw std::invalid_argument("resample: trajectory endpoints do not fall on the coarse grid");
  }
  std::vector<VehicleState> out;
  for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(down)) out.push_back(traj[i]);
  return Trajectory(traj.start_step() / down, dt_new, std::move(out));
}

Trajectory extend_constant_velocity(const Trajectory& traj, std::size_t total_size) {
  if (traj.size() >= total_size) return traj;
  std::vector<VehicleState> out(traj.states().begin(), traj.states().end());
  const double dt = traj.dt();
  while (out.size() < total_size) {
    VehicleState s = out.back();
    s.x += dt * s.v * std::cos(s.psi);
    s.y += dt * s.v * std::sin(s.psi);
    out.push_back(s);
  }
  return Trajectory(traj.start_step(), dt, std::move(out));
}

}  // namespace cooplane
