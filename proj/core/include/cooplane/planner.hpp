#pragma once

#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "cooplane/core.hpp"
#include "cooplane/nlp.hpp"
#include "cooplane/occupancy.hpp"
#include "cooplane/predict.hpp"

namespace cooplane {

/// One step of the kinematic bicycle model (Euler).
VehicleState kinematic_step(const VehicleState& state, const ControlInput& u, double dt,
                            const VehicleGeometry& geom);

/// d(next)/d(state) and d(next)/d(u) of kinematic_step.
struct StepJacobians {
  Eigen::Matrix4d A;
  Eigen::Matrix<double, 4, 2> B;
};
StepJacobians kinematic_jacobians(const VehicleState& state, const ControlInput& u, double dt,
                                  const VehicleGeometry& geom);

struct MpcConfig {
  int horizon = 20;  // M
  double dt = kDefaultDt;
  Eigen::Vector4d q_state{1.0, 10.0, 10.0, 1.0};  // diagonal of Q_tau
  Eigen::Vector2d q_u{0.5, 5.0};
  Eigen::Vector2d q_du{1.0, 20.0};
  double d_min = 0.3;
  double obstacle_range = 60.0;  // longitudinal pruning, m
  int max_obstacles = 8;
  // An obstacle-step pair gets a dual block only while the obstacle is
  // within this distance of the ego's expected position at that step.
  double block_radius = 10.0;
  double fallback_brake = -4.0;
  double dual_init = 0.05;
  NlpOptions nlp{};

  void validate() const;
};

/// A surrounding vehicle as the planner sees it: states[i] is its
/// predicted state i steps after the current one (states[0] = now).
struct MpcObstacle {
  int id = 0;
  VehicleGeometry geom;
  std::vector<VehicleState> states;
};

struct MpcInstance {
  VehicleState x0;                  // fixed initial state
  ControlInput u_prev;              // control applied at the previous step
  std::vector<VehicleState> ref;    // M + 1 samples, ref[0] = now
  std::vector<MpcObstacle> obstacles;
  std::vector<std::pair<int, int>> blocks;  // (obstacle index, step 1..M)
  VehicleGeometry geom;
  MotionLimits limits;
  MpcConfig cfg;
};

/// Decision vector layout: controls (a, delta) for steps 0..M-1, then per
/// block lambda(4), mu(4), rho(2). Equalities: 4 per block. Inequalities:
/// 2 per block (distance, |rho| <= 1), then finite state bounds, then rates.
struct MpcProblem {
  NlpProblem nlp;
  std::shared_ptr<const MpcInstance> instance;

  int controls() const { return 2 * instance->cfg.horizon; }
  int block_offset(int block) const { return controls() + 10 * block; }
  std::vector<VehicleState> rollout(const Eigen::VectorXd& z) const;
  DualCertificate certificate(const Eigen::VectorXd& z, int block) const;
};

MpcProblem build_mpc_problem(MpcInstance instance);

/// Convenience form: obstacles from predictions (aligned so sample 0 is
/// now), all within obstacle_range, every step constrained.
MpcProblem build_mpc_problem(const VehicleState& x0, const ControlInput& u_prev,
                             const Trajectory& ref, const PredictionResult& predictions,
                             const VehicleGeometry& geom, const MotionLimits& limits,
                             const MpcConfig& cfg);

struct PlanStepResult {
  ControlInput u;
  std::vector<VehicleState> planned;  // M + 1 states from the current one
  std::vector<ControlInput> controls;
  NlpStatus status = NlpStatus::kNumericFailure;
  bool fallback = false;
  int iterations = 0;
  double solve_time = 0.0;  // s
  int blocks = 0;
  std::map<int, std::vector<std::pair<int, DualCertificate>>> duals;  // id -> (step, cert)
  double min_planned_distance = 0.0;  // oracle, planned ego vs obstacles over all steps
  double max_certificate_residual = 0.0;
};

/// Receding-horizon planner with warm starts carried between calls.
class MpcPlanner {
 public:
  MpcPlanner(VehicleGeometry geom, MotionLimits limits, MpcConfig cfg);

  /// ref holds at least M + 1 samples starting now; obstacles are pruned by
  /// range and count inside.
  PlanStepResult step(const VehicleState& x0, const ControlInput& u_prev, const Trajectory& ref,
                      std::vector<MpcObstacle> obstacles);
  void reset();
  const MpcConfig& config() const { return cfg_; }

 private:
  VehicleGeometry geom_;
  MotionLimits limits_;
  MpcConfig cfg_;
  std::vector<ControlInput> prev_controls_;
  std::vector<VehicleState> prev_plan_;
  std::map<std::pair<int, int>, Eigen::Matrix<double, 10, 1>> prev_duals_;  // (id, step)
};

/// Braking fallback: hold steering, move the acceleration toward
/// fallback_brake within the rate limits, never drive v below zero.
ControlInput fallback_control(const VehicleState& state, const ControlInput& u_prev,
                              const MotionLimits& limits, const MpcConfig& cfg);

/// Obstacles from a prediction; sample `offset` of each trajectory becomes
/// states[0]. Short trajectories are extended at constant velocity.
std::vector<MpcObstacle> obstacles_from(const PredictionResult& predictions, std::size_t offset,
                                        int horizon);

struct HorizonResult {
  Trajectory executed;
  std::vector<ControlInput> controls;
  std::vector<PlanStepResult> steps;
  int fallbacks = 0;
};

/// Open-loop execution of a reference against fixed predictions: solve,
/// apply the first control, shift, until the reference runs out.
HorizonResult plan_horizon(const Trajectory& ref, const PredictionResult& predictions,
                           const VehicleState& start, const ControlInput& u_prev,
                           const VehicleGeometry& geom, const MotionLimits& limits,
                           const MpcConfig& cfg, std::ostream* step_log = nullptr);

void write_plan_log_header(std::ostream& out);
void write_plan_log_row(std::ostream& out, std::int64_t step, const PlanStepResult& r);

}  // namespace cooplane
