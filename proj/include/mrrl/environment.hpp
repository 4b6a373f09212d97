#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrrl/baseline.hpp"
#include "mrrl/dynamics.hpp"
#include "mrrl/random.hpp"

namespace mrrl {

constexpr int kMaxObstacleSlots = 3;
constexpr int kObstacleSlotWidth = 5;
constexpr int kObservationWidth = 14 + kObstacleSlotWidth * kMaxObstacleSlots;
constexpr int kActionDim = 2;

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Observation = Eigen::Matrix<double, kObservationWidth, 1>;

struct Obstacle {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double radius = 1.0;
  double safe_radius = 2.5;
  double q_c = 1.0;
  double c = 25.0;

  void validate(double vessel_radius) const;
  Vec2 position_at(double t) const { return position + velocity * t; }
};

struct RewardWeights {
  Vec6 h1 = (Vec6() << 0.025, 0.025, 0.0016, 0.005, 0.001, 0.0).finished();
  Vec2 h2 = Vec2(1.25e-3, 1.25e-3);

  void validate() const;
};

struct ClosestApproach {
  double distance = 0.0;
  bool closing = false;
};

ClosestApproach closest_approach(const Vec2& p_a, const Vec2& v_a, const Obstacle& obstacle);

/// Sum of sigmoid penalties over visible, closing obstacles. Obstacle
/// positions must already be evaluated at the current time.
double collision_reward(const Vec2& p_a, const Vec2& v_a, const std::vector<Obstacle>& obstacles,
                        double detection_radius);

/// State difference x - x_m with the heading entry wrapped.
Vec6 state_error(const VehicleState& x, const VehicleState& x_m);

double tracking_reward(const VehicleState& x, const VehicleState& x_m, const Vec2& u_l,
                       const RewardWeights& w);

/// Fixed-width network input. Layout:
///   [0,6)   nominal pose relative to the reference (reference frame), nominal velocity
///   [6,12)  plant pose relative to the nominal model (nominal frame), plant velocity
///   [12,14) baseline surge force and yaw moment
///   then kMaxObstacleSlots slots of (relative position, relative velocity, flag)
///   in the plant body frame, nearest first.
Observation assemble_observation(const VehicleState& x_m, const VehicleState& x,
                                 const ReferenceState& ref, const Vec2& u_b,
                                 const std::vector<Obstacle>& obstacles, double detection_radius);

/// Typical magnitudes of the observation entries, used to normalise network inputs.
Observation observation_scale();

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Sampling ranges for the plant's initial state. Position and heading are
/// offsets from the reference pose at the episode start time; surge speed
/// is absolute.
struct InitialRanges {
  Range dx{-1.5, 1.5};
  Range dy{-1.5, 1.5};
  Range dpsi{-0.15 * std::numbers::pi, 0.15 * std::numbers::pi};
  Range u{0.2, 0.4};
  Range start_time{0.0, 0.0};
};

struct Scenario {
  int id = 1;
  ReferenceProfile train_profile;
  ReferenceProfile eval_profile;
  std::vector<Obstacle> obstacles;
  InitialRanges ranges;
  InitialRanges eval_initial;
  double detection_radius = 7.5;
  double vessel_radius = 1.0;

  void validate() const;
};

/// Scenario presets 1-3. Preset 4 is scenario 2 with a different obstacle
/// sensitivity and is built by the caller.
Scenario make_scenario(int id);

struct EnvConfig {
  Scenario scenario;
  HydroParams hydro;
  BacksteppingGains gains;
  RewardWeights weights;
  Vec2 tau_max = Vec2(2.0, 1.0);
  double dt = 0.1;
  int steps = 1000;
  bool use_baseline = true;
  bool evaluation = false;
  double divergence_radius = 100.0;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  double tracking = 0.0;
  double collision = 0.0;
  bool done = false;
  bool diverged = false;
};

class Environment {
 public:
  explicit Environment(EnvConfig config);

  Observation reset(std::uint64_t seed);
  Observation reset(Rng& rng);
  StepResult step(const Vec2& u_l);

  const EnvConfig& config() const { return config_; }
  const ReferenceProfile& profile() const;
  double time() const { return time_; }
  int step_count() const { return steps_; }
  const VehicleState& plant() const { return plant_; }
  const VehicleState& nominal() const { return nominal_; }
  const ReferenceState& reference() const { return ref_; }
  const Vec2& baseline_action() const { return u_b_; }
  const Vec2& last_action() const { return u_l_; }
  double last_tracking() const { return last_tracking_; }
  double last_collision() const { return last_collision_; }
  std::vector<Obstacle> obstacles_now() const;
  Observation observation() const;

 private:
  Vec2 compute_baseline(const VehicleState& x) const;

  EnvConfig config_;
  NominalModel nominal_model_;
  VehicleState plant_;
  VehicleState nominal_;
  ReferenceState ref_;
  Vec2 u_b_ = Vec2::Zero();
  Vec2 u_l_ = Vec2::Zero();
  double time_ = 0.0;
  double start_time_ = 0.0;
  int steps_ = 0;
  double last_tracking_ = 0.0;
  double last_collision_ = 0.0;
  bool ready_ = false;
};

}  // namespace mrrl
