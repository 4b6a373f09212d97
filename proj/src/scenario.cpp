#include <numbers>
#include <stdexcept>

#include "mrrl/environment.hpp"

namespace mrrl {

namespace {

constexpr double pi = std::numbers::pi;

Obstacle fixed_obstacle(double x, double y, double radius) {
  Obstacle o;
  o.position = Vec2(x, y);
  o.radius = radius;
  o.safe_radius = radius + 1.0 + 0.5;
  return o;
}

}  // namespace

Scenario make_scenario(int id) {
  Scenario s;
  s.id = id;
  s.eval_initial.dx = {-1.0, -1.0};
  s.eval_initial.dy = {1.0, 1.0};
  s.eval_initial.dpsi = {-0.1 * pi, -0.1 * pi};
  s.eval_initial.u = {0.3, 0.3};
  s.eval_initial.start_time = {0.0, 0.0};

  ReferenceProfile& tr = s.train_profile;
  tr.eta0 = Vec3(0.0, 0.0, pi / 4.0);
  tr.r0 = 0.0;
  tr.duration = 100.0;

  switch (id) {
    case 1:
      tr.u0 = 0.4;
      tr.surge_accel = Schedule({0.0, 20.0}, {0.005, 0.0});
      tr.yaw_accel = Schedule({0.0, 25.0, 50.0}, {0.0, pi / 600.0, 0.0});
      s.eval_profile = tr;
      s.eval_profile.yaw_accel =
          Schedule({0.0, 25.0, 50.0, 125.0, 150.0}, {0.0, pi / 600.0, 0.0, -pi / 600.0, 0.0});
      break;
    case 2:
    case 3:
      tr.u0 = 0.7;
      tr.surge_accel = Schedule::constant(0.0);
      tr.yaw_accel = Schedule({0.0, 20.0, 50.0}, {0.0, pi / 800.0, 0.0});
      s.eval_profile = tr;
      if (id == 2) {
        s.obstacles = {fixed_obstacle(2.97, 6.93, 1.5), fixed_obstacle(19.02, 17.22, 1.8),
                       fixed_obstacle(1.91, 26.29, 2.0)};
      } else {
        s.obstacles = {fixed_obstacle(2.97, 6.93, 1.5), fixed_obstacle(1.91, 26.29, 2.0)};
        Obstacle moving = fixed_obstacle(34.0, 13.8, 1.0);
        moving.velocity = Vec2(-0.4, 0.25);
        s.obstacles.push_back(moving);
      }
      break;
    default:
      throw std::invalid_argument("unknown scenario id " + std::to_string(id));
  }
  s.eval_profile.duration = 200.0;
  return s;
}

}  // namespace mrrl
