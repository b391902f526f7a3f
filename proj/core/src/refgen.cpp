#include "cooplane/refgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cooplane {
namespace {

struct JerkSegment {
  double begin;
  double end;
  double jerk;
};

struct Kinematics {
  double a = 0.0;
  double v = 0.0;
  double p = 0.0;
};

void advance(Kinematics& k, double jerk, double h) {
  k.p += k.v * h + 0.5 * k.a * h * h + jerk * h * h * h / 6.0;
  k.v += k.a * h + 0.5 * jerk * h * h;
  k.a += jerk * h;
}

// Exact state at time t; zero jerk between and after segments.
Kinematics integrate(const std::vector<JerkSegment>& segs, Kinematics k, double t) {
  double cursor = 0.0;
  for (const auto& s : segs) {
    if (t <= cursor) break;
    const double gap_end = std::min(t, s.begin);
    if (gap_end > cursor) {
      advance(k, 0.0, gap_end - cursor);
      cursor = gap_end;
    }
    const double seg_end = std::min(t, s.end);
    if (seg_end > cursor) {
      advance(k, s.jerk, seg_end - cursor);
      cursor = seg_end;
    }
  }
  if (t > cursor) advance(k, 0.0, t - cursor);
  return k;
}

double jerk_at(const std::vector<JerkSegment>& segs, double t) {
  for (const auto& s : segs)
    if (t >= s.begin && t < s.end) return s.jerk;
  return 0.0;
}

std::vector<JerkSegment> lateral_segments(const LateralTimestamps& ts, double jerk) {
  return {{0.0, ts.t1, jerk}, {ts.t2, ts.t3, -jerk}, {ts.t4, ts.t5, jerk}};
}

std::vector<JerkSegment> longitudinal_segments(const LongitudinalTimestamps& ts, double jerk) {
  return {{0.0, ts.t6, jerk}, {ts.t7, ts.t8, -jerk}};
}

std::size_t sample_count(double duration, double dt) {
  // Guard against ceil(4.0000000001) on durations that land on the grid.
  return static_cast<std::size_t>(std::ceil(duration / dt - 1e-9)) + 1;
}

ProfileSamples sample(const std::vector<JerkSegment>& segs, Kinematics start, double duration,
                      double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("profile dt must be positive");
  ProfileSamples out;
  out.dt = dt;
  const std::size_t n = sample_count(duration, dt);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const Kinematics k = integrate(segs, start, t);
    out.jerk.push_back(jerk_at(segs, t));
    out.accel.push_back(k.a);
    out.vel.push_back(k.v);
    out.pos.push_back(k.p);
  }
  return out;
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) throw std::invalid_argument(what);
}

}  // namespace

std::string_view to_string(LateralAction action) {
  switch (action) {
    case LateralAction::kLeft: return "LEFT";
    case LateralAction::kKeep: return "KEEP";
    case LateralAction::kRight: return "RIGHT";
  }
  return "?";
}

std::string_view to_string(LongitudinalOption option) {
  switch (option) {
    case LongitudinalOption::kDecelerate: return "DECELERATE";
    case LongitudinalOption::kKeepSpeed: return "KEEP_SPEED";
    case LongitudinalOption::kAccelerate: return "ACCELERATE";
  }
  return "?";
}

LateralTimestamps lateral_timestamps(double a_ymax, double da_ymax, double d_w) {
  require_positive(a_ymax, "a_ymax must be positive");
  require_positive(da_ymax, "da_ymax must be positive");
  require_positive(d_w, "d_w must be positive");
  LateralTimestamps ts;
  ts.t1 = a_ymax / da_ymax;
  ts.t2 = -ts.t1 / 2.0 + std::sqrt(ts.t1 * ts.t1 + 4.0 * d_w / a_ymax) / 2.0;
  ts.peak_accel = a_ymax;
  if (ts.t2 < ts.t1) {
    // No room for a plateau: d_w = 2 J t^3 with t the ramp time.
    const double t = std::cbrt(d_w / (2.0 * da_ymax));
    ts.t1 = t;
    ts.t2 = t;
    ts.peak_accel = da_ymax * t;
    ts.degenerate = true;
  }
  ts.t3 = 2.0 * ts.t1 + ts.t2;
  ts.t4 = ts.t1 + 2.0 * ts.t2;
  ts.t5 = 2.0 * ts.t1 + 2.0 * ts.t2;
  return ts;
}

LongitudinalTimestamps longitudinal_timestamps(double a_xmax, double da_xmax, double v_x0,
                                               double v_x1) {
  require_positive(a_xmax, "a_xmax must be positive");
  require_positive(da_xmax, "da_xmax must be positive");
  LongitudinalTimestamps ts;
  const double dv = std::abs(v_x1 - v_x0);
  if (dv == 0.0) return ts;
  ts.t6 = a_xmax / da_xmax;
  ts.t7 = dv / a_xmax;
  ts.peak_accel = a_xmax;
  if (ts.t7 < ts.t6) {
    const double t = std::sqrt(dv / da_xmax);
    ts.t6 = t;
    ts.t7 = t;
    ts.peak_accel = da_xmax * t;
    ts.degenerate = true;
  }
  ts.t8 = ts.t6 + ts.t7;
  return ts;
}

ProfileSamples lateral_profile(const LateralTimestamps& ts, double da_ymax, double dt,
                               double direction) {
  const double sign = direction < 0.0 ? -1.0 : 1.0;
  return sample(lateral_segments(ts, sign * da_ymax), {}, ts.duration(), dt);
}

ProfileSamples longitudinal_profile(const LongitudinalTimestamps& ts, double da_xmax,
                                    double v_x0, double v_x1, double dt) {
  const double sign = v_x1 < v_x0 ? -1.0 : 1.0;
  return sample(longitudinal_segments(ts, sign * da_xmax), {0.0, v_x0, 0.0}, ts.duration(), dt);
}

double target_speed(double v_x0, LongitudinalOption lon, const MotionLimits& limits,
                    double speed_step) {
  double v = v_x0;
  if (lon == LongitudinalOption::kAccelerate) v += speed_step;
  if (lon == LongitudinalOption::kDecelerate) v -= speed_step;
  return std::clamp(v, limits.state_min.v, limits.state_max.v);
}

DecisionCandidate build_reference(const VehicleState& state, std::int64_t start_step,
                                  LateralAction lat, LongitudinalOption lon,
                                  const RoadGeometry& road, const MotionLimits& limits,
                                  const RefgenParams& params) {
  validate(state);
  require_positive(params.dt, "dt must be positive");
  require_positive(params.horizon, "horizon must be positive");

  DecisionCandidate c;
  c.lat = lat;
  c.lon = lon;
  c.index = candidate_index(lat, lon);
  c.initial_lane = road.lane_of(state.y);
  c.target_lane = c.initial_lane + (lat == LateralAction::kLeft ? 1 : 0) -
                  (lat == LateralAction::kRight ? 1 : 0);
  if (!road.has_lane(c.target_lane)) throw std::invalid_argument("target lane does not exist");

  const double d_signed = road.lane_center(c.target_lane) - state.y;
  const bool lateral_active =
      lat != LateralAction::kKeep || std::abs(d_signed) > params.recenter_tol;
  std::vector<JerkSegment> lat_segs;
  if (lateral_active) {
    c.lat_ts = lateral_timestamps(limits.ay_max, limits.day_max, std::abs(d_signed));
    if (c.lat_ts.duration() > params.horizon + 1e-9)
      throw std::invalid_argument("lateral maneuver exceeds the reference horizon");
    lat_segs = lateral_segments(c.lat_ts, d_signed < 0.0 ? -limits.day_max : limits.day_max);
  }

  c.v_x0 = std::clamp(state.v, limits.state_min.v, limits.state_max.v);
  c.v_x1 = target_speed(c.v_x0, lon, limits, params.speed_step);
  c.lon_ts = longitudinal_timestamps(limits.ax_max, limits.dax_max, c.v_x0, c.v_x1);
  const auto lon_segs =
      longitudinal_segments(c.lon_ts, c.v_x1 < c.v_x0 ? -limits.dax_max : limits.dax_max);

  const std::size_t n = sample_count(params.horizon, params.dt);
  std::vector<VehicleState> states;
  states.reserve(n);
  states.push_back(state);
  for (std::size_t i = 1; i < n; ++i) {
    const double t = static_cast<double>(i) * params.dt;
    const Kinematics lon_k = integrate(lon_segs, {0.0, c.v_x0, 0.0}, t);
    const Kinematics lat_k = lateral_active ? integrate(lat_segs, {}, t) : Kinematics{};
    VehicleState s;
    s.x = state.x + lon_k.p;
    s.y = state.y + lat_k.p;
    s.v = std::hypot(lon_k.v, lat_k.v);
    s.psi = s.v > 0.0 ? std::atan2(lat_k.v, lon_k.v) : 0.0;
    states.push_back(s);
  }
  c.reference = Trajectory(start_step, params.dt, std::move(states));
  return c;
}

std::vector<DecisionCandidate> build_decision_set(const VehicleState& state,
                                                  std::int64_t start_step,
                                                  const RoadGeometry& road,
                                                  const MotionLimits& limits,
                                                  const RefgenParams& params) {
  std::vector<DecisionCandidate> out;
  const int lane = road.lane_of(state.y);
  const double v_x0 = std::clamp(state.v, limits.state_min.v, limits.state_max.v);
  const double v_keep = target_speed(v_x0, LongitudinalOption::kKeepSpeed, limits, params.speed_step);
  for (LateralAction lat : {LateralAction::kLeft, LateralAction::kKeep, LateralAction::kRight}) {
    if (lat == LateralAction::kLeft && !road.has_lane(lane + 1)) continue;
    if (lat == LateralAction::kRight && !road.has_lane(lane - 1)) continue;
    for (LongitudinalOption lon : {LongitudinalOption::kDecelerate, LongitudinalOption::kKeepSpeed,
                                   LongitudinalOption::kAccelerate}) {
      if (lon != LongitudinalOption::kKeepSpeed &&
          target_speed(v_x0, lon, limits, params.speed_step) == v_keep)
        continue;
      try {
        out.push_back(build_reference(state, start_step, lat, lon, road, limits, params));
      } catch (const std::invalid_argument&) {
        // Maneuver longer than the horizon: not part of the set.
      }
    }
  }
  return out;
}

}  // namespace cooplane
