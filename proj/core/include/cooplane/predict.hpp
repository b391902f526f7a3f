#pragma once

#include <functional>
#include <map>
#include <string_view>
#include <vector>

#include "cooplane/core.hpp"
#include "cooplane/traffic.hpp"

namespace cooplane {

/// Observed past of one vehicle, most recent sample last.
using History = Trajectory;

struct PredictionRequest {
  Trajectory ego_reference;  // candidate reference, sample 0 = now
  WorldState world;          // snapshot at ego_reference.start_step()
  std::map<int, History> histories;
  int horizon = 60;          // P; results carry P + 1 samples
};

enum class PredictorKind { kInteractive, kConstantVelocity };

std::string_view to_string(PredictorKind kind);

struct PredictedVehicle {
  int id = 0;
  VehicleGeometry geom;
  bool stationary = false;
  Trajectory trajectory;  // P + 1 samples aligned with the ego reference
};

struct PredictionResult {
  PredictorKind kind = PredictorKind::kConstantVelocity;
  std::vector<PredictedVehicle> vehicles;

  const PredictedVehicle* find(int id) const;
};

/// Advances every non-ego vehicle of a world by one step. The ego is read
/// but never written.
using OneStepModel = std::function<void(WorldState&)>;

/// IDM + MOBIL with the parameters stored in the world, no recycling.
void rule_based_one_step(WorldState& world);

PredictionResult predict_constant_velocity(const PredictionRequest& req);

/// Closed-loop rollout: the ego is pinned to its reference sample k while
/// the model advances everyone else from step k - 1 to k.
PredictionResult predict_interactive(const PredictionRequest& req,
                                     const OneStepModel& model = rule_based_one_step);

/// What the ego may know about the others: states are exact, driver
/// parameters are replaced by `nominal[id]` (vehicles missing from the
/// map keep the defaults). The desired speed is raised to the current
/// speed where it would otherwise be slower, so free-flowing vehicles are
/// not predicted to brake for no reason.
WorldState observed_world(const WorldState& truth, const std::map<int, DriverParams>& nominal);

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual PredictorKind kind() const = 0;
  virtual PredictionResult predict(const PredictionRequest& req) const = 0;
};

class ConstantVelocityPredictor final : public Predictor {
 public:
  PredictorKind kind() const override { return PredictorKind::kConstantVelocity; }
  PredictionResult predict(const PredictionRequest& req) const override {
    return predict_constant_velocity(req);
  }
};

class InteractivePredictor final : public Predictor {
 public:
  explicit InteractivePredictor(OneStepModel model = rule_based_one_step)
      : model_(std::move(model)) {}
  PredictorKind kind() const override { return PredictorKind::kInteractive; }
  PredictionResult predict(const PredictionRequest& req) const override {
    return predict_interactive(req, model_);
  }

 private:
  OneStepModel model_;
};

}  // namespace cooplane
