#include "mrrl/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mrrl {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a(0) * b(1) - a(1) * b(0); }

Eigen::Matrix2d rot2(double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  Eigen::Matrix2d R;
  R << c, -s, s, c;
  return R;
}

Vec2 world_velocity(const VehicleState& x) { return rot2(x.eta(2)) * x.nu.head<2>(); }

}  // namespace

void Obstacle::validate(double vessel_radius) const {
  if (!(radius > 0.0)) throw std::invalid_argument("obstacle radius must be positive");
  if (!(safe_radius > radius + vessel_radius))
    throw std::invalid_argument("obstacle safe radius must exceed obstacle radius plus vessel radius");
  if (!(q_c >= 0.0)) throw std::invalid_argument("obstacle q_c must be non-negative");
  if (!(c > 0.0)) throw std::invalid_argument("obstacle sensitivity c must be positive");
}

void RewardWeights::validate() const {
  if (!(h1.minCoeff() >= 0.0)) throw std::invalid_argument("H1 diagonal must be non-negative");
  if (!(h2.minCoeff() > 0.0)) throw std::invalid_argument("H2 diagonal must be positive");
}

ClosestApproach closest_approach(const Vec2& p_a, const Vec2& v_a, const Obstacle& obstacle) {
  const Vec2 dv = v_a - obstacle.velocity;
  const Vec2 dp = obstacle.position - p_a;
  const double speed = dv.norm();
  if (speed == 0.0) return {dp.norm(), false};
  return {std::abs(cross2(dv, dp)) / speed, dv.dot(dp) > 0.0};
}

double collision_reward(const Vec2& p_a, const Vec2& v_a, const std::vector<Obstacle>& obstacles,
                        double detection_radius) {
  if (!(detection_radius > 0.0)) throw std::invalid_argument("detection radius must be positive");
  double total = 0.0;
  for (const Obstacle& o : obstacles) {
    if ((o.position - p_a).norm() > detection_radius) continue;
    const ClosestApproach ca = closest_approach(p_a, v_a, o);
    if (!ca.closing) continue;
    total -= o.q_c / (1.0 + std::exp(o.c * (ca.distance - o.safe_radius)));
  }
  return total;
}

Vec6 state_error(const VehicleState& x, const VehicleState& x_m) {
  Vec6 e;
  e << x.eta - x_m.eta, x.nu - x_m.nu;
  e(2) = wrap_angle(e(2));
  return e;
}

double tracking_reward(const VehicleState& x, const VehicleState& x_m, const Vec2& u_l,
                       const RewardWeights& w) {
  const Vec6 e = state_error(x, x_m);
  return -(e.cwiseProduct(e).dot(w.h1)) - u_l.cwiseProduct(u_l).dot(w.h2);
}

Observation assemble_observation(const VehicleState& x_m, const VehicleState& x,
                                 const ReferenceState& ref, const Vec2& u_b,
                                 const std::vector<Obstacle>& obstacles, double detection_radius) {
  Observation obs = Observation::Zero();
  const Eigen::Matrix2d Rr = rot2(ref.eta(2));
  const Eigen::Matrix2d Rm = rot2(x_m.eta(2));
  const Eigen::Matrix2d Ra = rot2(x.eta(2));

  obs.segment<2>(0) = Rr.transpose() * (x_m.eta.head<2>() - ref.eta.head<2>());
  obs(2) = wrap_angle(x_m.eta(2) - ref.eta(2));
  obs.segment<3>(3) = x_m.nu;
  obs.segment<2>(6) = Rm.transpose() * (x.eta.head<2>() - x_m.eta.head<2>());
  obs(8) = wrap_angle(x.eta(2) - x_m.eta(2));
  obs.segment<3>(9) = x.nu;
  obs.segment<2>(12) = u_b;

  const Vec2 p_a = x.eta.head<2>();
  const Vec2 v_a = world_velocity(x);
  std::vector<std::pair<double, const Obstacle*>> visible;
  for (const Obstacle& o : obstacles) {
    const double d = (o.position - p_a).norm();
    if (d <= detection_radius) visible.emplace_back(d, &o);
  }
  std::stable_sort(visible.begin(), visible.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  const int n = std::min<int>(static_cast<int>(visible.size()), kMaxObstacleSlots);
  for (int i = 0; i < n; ++i) {
    const Obstacle& o = *visible[static_cast<std::size_t>(i)].second;
    const int base = 14 + kObstacleSlotWidth * i;
    obs.segment<2>(base) = Ra.transpose() * (o.position - p_a);
    obs.segment<2>(base + 2) = Ra.transpose() * (o.velocity - v_a);
    obs(base + 4) = 1.0;
  }
  return obs;
}

Observation observation_scale() {
  Observation s;
  s.segment<6>(0) << 1.0, 1.0, 0.5, 0.5, 0.2, 0.1;
  s.segment<6>(6) << 1.0, 1.0, 0.5, 0.5, 0.2, 0.1;
  s.segment<2>(12) << 5.0, 1.0;
  for (int i = 0; i < kMaxObstacleSlots; ++i)
    s.segment<5>(14 + kObstacleSlotWidth * i) << 5.0, 5.0, 0.5, 0.5, 1.0;
  return s;
}

void Scenario::validate() const {
  if (!(detection_radius > 0.0)) throw std::invalid_argument("detection radius must be positive");
  if (!(vessel_radius > 0.0)) throw std::invalid_argument("vessel radius must be positive");
  for (const Obstacle& o : obstacles) o.validate(vessel_radius);
  for (const InitialRanges* r : {&ranges, &eval_initial}) {
    for (const Range* x : {&r->dx, &r->dy, &r->dpsi, &r->u, &r->start_time})
      if (x->hi < x->lo) throw std::invalid_argument("initial range has hi < lo");
    if (r->start_time.lo < 0.0) throw std::invalid_argument("start time must be non-negative");
  }
}

Environment::Environment(EnvConfig config)
    : config_(std::move(config)), nominal_model_(NominalModel::from(config_.hydro)) {
  config_.scenario.validate();
  config_.weights.validate();
  config_.gains.validate();
  if (!(config_.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (config_.steps <= 0) throw std::invalid_argument("steps per episode must be positive");
  if (!(config_.tau_max.minCoeff() > 0.0)) throw std::invalid_argument("tau_max must be positive");
}

const ReferenceProfile& Environment::profile() const {
  return config_.evaluation ? config_.scenario.eval_profile : config_.scenario.train_profile;
}

Vec2 Environment::compute_baseline(const VehicleState& x) const {
  if (!config_.use_baseline) return Vec2::Zero();
  const Vec3 tau = baseline_control(x, ref_, config_.gains, nominal_model_);
  return {tau(0), tau(2)};
}

std::vector<Obstacle> Environment::obstacles_now() const {
  std::vector<Obstacle> out = config_.scenario.obstacles;
  for (Obstacle& o : out) o.position = o.position_at(time_);
  return out;
}

Observation Environment::observation() const {
  return assemble_observation(nominal_, plant_, ref_, u_b_, obstacles_now(),
                              config_.scenario.detection_radius);
}

Observation Environment::reset(std::uint64_t seed) {
  Rng rng(seed);
  return reset(rng);
}

Observation Environment::reset(Rng& rng) {
  const InitialRanges& r = config_.evaluation ? config_.scenario.eval_initial : config_.scenario.ranges;
  const ReferenceProfile& prof = profile();
  const double dt = config_.dt;

  const int start_steps = static_cast<int>(std::floor(rng.uniform(r.start_time.lo, r.start_time.hi) / dt + 1e-9));
  ref_ = prof.initial_state();
  time_ = 0.0;
  for (int i = 0; i < start_steps; ++i) {
    ref_.accel = reference_profile(time_, prof);
    ref_ = planner_step(ref_, dt);
    time_ = (i + 1) * dt;
  }
  ref_.accel = reference_profile(time_, prof);
  start_time_ = time_;

  plant_.eta = Vec3(ref_.eta(0) + rng.uniform(r.dx.lo, r.dx.hi),
                    ref_.eta(1) + rng.uniform(r.dy.lo, r.dy.hi),
                    ref_.eta(2) + rng.uniform(r.dpsi.lo, r.dpsi.hi));
  plant_.nu = Vec3(rng.uniform(r.u.lo, r.u.hi), 0.0, 0.0);
  nominal_.eta = ref_.eta;
  nominal_.nu = ref_.nu;

  steps_ = 0;
  u_l_ = Vec2::Zero();
  u_b_ = compute_baseline(plant_);
  last_tracking_ = 0.0;
  last_collision_ = 0.0;
  ready_ = true;
  return observation();
}

StepResult Environment::step(const Vec2& u_l) {
  if (!ready_) throw std::logic_error("environment must be reset before stepping");
  const double dt = config_.dt;
  StepResult out;
  u_l_ = u_l;

  const Vec3 tau(u_b_(0) + u_l(0), 0.0, u_b_(1) + u_l(1));
  const Vec3 tau_m = baseline_control(nominal_, ref_, config_.gains, nominal_model_);
  try {
    plant_ = integrate_true(plant_, tau, dt, config_.hydro);
    if ((plant_.eta.head<2>() - nominal_.eta.head<2>()).norm() > config_.divergence_radius)
      throw IntegrationDiverged("plant left the divergence radius");
  } catch (const IntegrationDiverged&) {
    out.diverged = true;
    out.done = true;
    ready_ = false;
    out.tracking = last_tracking_;
    out.collision = last_collision_;
    out.reward = out.tracking + out.collision;
    out.obs = Observation::Zero();
    return out;
  }
  nominal_ = integrate_nominal(nominal_, tau_m, dt, nominal_model_);
  ref_ = planner_step(ref_, dt);
  ++steps_;
  time_ = start_time_ + steps_ * dt;
  ref_.accel = reference_profile(time_, profile());
  u_b_ = compute_baseline(plant_);

  const std::vector<Obstacle> obs_now = obstacles_now();
  out.tracking = tracking_reward(plant_, nominal_, u_l, config_.weights);
  out.collision = collision_reward(plant_.eta.head<2>(), world_velocity(plant_), obs_now,
                                   config_.scenario.detection_radius);
  out.reward = out.tracking + out.collision;
  last_tracking_ = out.tracking;
  last_collision_ = out.collision;
  out.obs = assemble_observation(nominal_, plant_, ref_, u_b_, obs_now, config_.scenario.detection_radius);
  out.done = steps_ >= config_.steps;
  if (out.done) ready_ = false;
  return out;
}

}  // namespace mrrl
