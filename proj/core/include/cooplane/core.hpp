#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cooplane {

/// Kinematic state of one vehicle at one time step. The road runs along +x,
/// y is positive to the left, psi is measured from the +x axis.
struct VehicleState {
  double x = 0.0;    // m
  double y = 0.0;    // m
  double psi = 0.0;  // rad
  double v = 0.0;    // m/s, non-negative

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

inline constexpr int kStateDim = 4;
inline constexpr int kControlDim = 2;
inline constexpr double kDefaultDt = 0.1;

/// Throws std::invalid_argument unless every field is finite and v >= 0.
void validate(const VehicleState& state);

/// Uniformly sampled sequence of states; sample i sits at time
/// (start_step + i) * dt.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::int64_t start_step, double dt, std::vector<VehicleState> states);

  std::int64_t start_step() const { return start_step_; }
  double dt() const { return dt_; }
  std::size_t size() const { return states_.size(); }
  bool empty() const { return states_.empty(); }

  const VehicleState& operator[](std::size_t i) const { return states_[i]; }
  const VehicleState& front() const { return states_.front(); }
  const VehicleState& back() const { return states_.back(); }
  std::span<const VehicleState> states() const { return states_; }

  double time_at(std::size_t i) const {
    return static_cast<double>(start_step_ + static_cast<std::int64_t>(i)) * dt_;
  }

  /// Samples [first, first + count), re-based so the result starts at
  /// start_step() + first.
  Trajectory slice(std::size_t first, std::size_t count) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::int64_t start_step_ = 0;
  double dt_ = kDefaultDt;
  std::vector<VehicleState> states_;
};

/// Longitudinal acceleration and front steering angle.
struct ControlInput {
  double a = 0.0;      // m/s^2
  double delta = 0.0;  // rad

  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct VehicleGeometry {
  double length = 4.0;
  double width = 1.8;
  double lf = 1.4;  // center of gravity to front axle
  double lr = 1.4;  // center of gravity to rear axle

  friend bool operator==(const VehicleGeometry&, const VehicleGeometry&) = default;
};

void validate(const VehicleGeometry& geom);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double value) const { return value >= lo && value <= hi; }
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Straight multi-lane road. Lane 0 is the rightmost lane (smallest y) and
/// lane indices grow to the left.
class RoadGeometry {
 public:
  static constexpr double kDefaultLaneWidth = 3.75;

  RoadGeometry() : RoadGeometry(2) {}
  explicit RoadGeometry(int lane_count, double lane_width = kDefaultLaneWidth,
                        double right_edge_y = 0.0);

  int lane_count() const { return lane_count_; }
  double lane_width() const { return lane_width_; }
  double lane_center(int lane) const;
  std::vector<double> lane_centers() const;
  Interval drivable() const { return {right_edge_, right_edge_ + lane_count_ * lane_width_}; }
  Interval lane_interval(int lane) const;

  /// Lane whose center is nearest to y, clamped to the existing lanes.
  int lane_of(double y) const;
  bool has_lane(int lane) const { return lane >= 0 && lane < lane_count_; }

  friend bool operator==(const RoadGeometry&, const RoadGeometry&) = default;

 private:
  int lane_count_ = 2;
  double lane_width_ = kDefaultLaneWidth;
  double right_edge_ = 0.0;
};

/// Bounds used both by the reference generator and the MPC.
struct MotionLimits {
  // Per-component state bounds, ordered (x, y, psi, v).
  VehicleState state_min{-1e9, 0.0, -0.35, 0.0};
  VehicleState state_max{1e9, 7.5, 0.35, 35.0};
  ControlInput u_min{-6.0, -0.5};
  ControlInput u_max{4.0, 0.5};
  // Per-step change of the control input.
  ControlInput du_min{-3.0, -0.1};
  ControlInput du_max{3.0, 0.1};

  double ay_max = 1.0;   // m/s^2
  double day_max = 2.0;  // m/s^3
  double ax_max = 2.0;   // m/s^2
  double dax_max = 4.0;  // m/s^3

  /// Limits whose lateral state bounds keep a vehicle of the given width on
  /// the drivable part of the road.
  static MotionLimits for_road(const RoadGeometry& road, const VehicleGeometry& geom);
};

void validate(const MotionLimits& limits);

/// Linear interpolation of x, y, v and shortest-arc interpolation of psi onto
/// a new sampling period. dt_new must be an integer multiple or divisor of
/// traj.dt(), and when coarsening, both the start time and the duration
/// must land on the new grid so the endpoints survive.
Trajectory resample(const Trajectory& traj, double dt_new);

/// Extends a trajectory to total_size samples by holding heading and speed
/// of its last state.
Trajectory extend_constant_velocity(const Trajectory& traj, std::size_t total_size);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

}  // namespace cooplane
