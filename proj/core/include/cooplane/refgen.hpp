#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "cooplane/core.hpp"

namespace cooplane {

enum class LateralAction { kLeft = 0, kKeep = 1, kRight = 2 };
enum class LongitudinalOption { kDecelerate = 0, kKeepSpeed = 1, kAccelerate = 2 };

std::string_view to_string(LateralAction action);
std::string_view to_string(LongitudinalOption option);

/// Breakpoints of the lateral double trapezoid. Jerk is +J on (0, t1),
/// -J on [t2, t3), +J on [t4, t5) and zero elsewhere; the maneuver ends at t5.
struct LateralTimestamps {
  double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0, t5 = 0.0;
  double peak_accel = 0.0;
  bool degenerate = false;  // triangular: plateau collapsed, peak reduced

  double duration() const { return t5; }
};

/// Breakpoints of the longitudinal trapezoid: +J on (0, t6), -J on [t7, t8).
struct LongitudinalTimestamps {
  double t6 = 0.0, t7 = 0.0, t8 = 0.0;
  double peak_accel = 0.0;
  bool degenerate = false;

  double duration() const { return t8; }
};

LateralTimestamps lateral_timestamps(double a_ymax, double da_ymax, double d_w);
LongitudinalTimestamps longitudinal_timestamps(double a_xmax, double da_xmax, double v_x0,
                                               double v_x1);

/// Samples at k*dt, k = 0..ceil(duration/dt), computed by exact integration of
/// the piecewise-constant jerk.
struct ProfileSamples {
  double dt = kDefaultDt;
  std::vector<double> jerk;
  std::vector<double> accel;
  std::vector<double> vel;
  std::vector<double> pos;
};

/// direction = +1 moves toward +y (left), -1 toward -y.
ProfileSamples lateral_profile(const LateralTimestamps& ts, double da_ymax, double dt,
                               double direction = 1.0);
/// Position starts at 0 and velocity at v_x0; sign of the jerk follows v_x1 - v_x0.
ProfileSamples longitudinal_profile(const LongitudinalTimestamps& ts, double da_xmax,
                                    double v_x0, double v_x1, double dt);

struct RefgenParams {
  double speed_step = 3.0;     // v_x1 offset for ACCELERATE / DECELERATE
  double horizon = 6.0;        // T_d, s
  double dt = kDefaultDt;
  double recenter_tol = 1e-3;  // KEEP re-centers only beyond this offset
};

struct DecisionCandidate {
  LateralAction lat = LateralAction::kKeep;
  LongitudinalOption lon = LongitudinalOption::kKeepSpeed;
  int index = 4;  // 3 * lat + lon
  int initial_lane = 0;
  int target_lane = 0;
  double v_x0 = 0.0;
  double v_x1 = 0.0;
  LateralTimestamps lat_ts;
  LongitudinalTimestamps lon_ts;
  Trajectory reference;  // horizon/dt + 1 samples, sample 0 is the start state

  bool is_lane_change() const { return target_lane != initial_lane; }
};

inline int candidate_index(LateralAction lat, LongitudinalOption lon) {
  return 3 * static_cast<int>(lat) + static_cast<int>(lon);
}

/// Target speed of a longitudinal option, clamped to the speed bounds.
double target_speed(double v_x0, LongitudinalOption lon, const MotionLimits& limits,
                    double speed_step);

/// Throws std::invalid_argument when the target lane does not exist or the
/// lateral maneuver does not fit in the horizon.
DecisionCandidate build_reference(const VehicleState& state, std::int64_t start_step,
                                  LateralAction lat, LongitudinalOption lon,
                                  const RoadGeometry& road, const MotionLimits& limits,
                                  const RefgenParams& params = {});

/// All valid candidates in index order. Lateral actions without a target
/// lane, maneuvers longer than the horizon, and ACCELERATE/DECELERATE entries
/// whose clamped speed equals KEEP_SPEED are dropped.
std::vector<DecisionCandidate> build_decision_set(const VehicleState& state,
                                                  std::int64_t start_step,
                                                  const RoadGeometry& road,
                                                  const MotionLimits& limits,
                                                  const RefgenParams& params = {});

}  // namespace cooplane
