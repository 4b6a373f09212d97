#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mrrl {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Hydrodynamic model of the surface vessel in the horizontal plane.
/// Defaults are the CyberShip II style model-ship parameters. Coefficient
/// names follow the usual SNAME notation, e.g. `Xuu` is X_{|u|u} and
/// `Yrv` is Y_{|r|v}.
struct HydroParams {
  double m = 23.8;
  double Iz = 1.76;
  double xg = 0.046;

  double Xudot = -2.0;
  double Xu = -0.7225;
  double Xuu = -1.3274;
  double Xuuu = -1.8664;

  double Yvdot = -10.0;
  double Yv = -38.612;
  double Yvv = -36.2823;
  double Yrv = -0.805;
  double Yrdot = -0.0;
  double Yr = 0.1079;
  double Yvr = -0.845;
  double Yrr = -3.45;

  double Nv = -0.1052;
  double Nvv = 5.0437;
  double Nrv = -0.13;
  double Nrdot = -1.0;
  double Nr = -1.9;
  double Nvr = 0.08;
  double Nrr = -0.75;

  Mat3 inertia() const;
};

/// Pose eta = (x, y, psi) in the inertial frame and body velocity
/// nu = (u, v, r). Heading is kept unwrapped.
struct VehicleState {
  Vec3 eta = Vec3::Zero();
  Vec3 nu = Vec3::Zero();

  Eigen::Matrix<double, 6, 1> stacked() const;
};

VehicleState operator+(const VehicleState& a, const VehicleState& b);
VehicleState operator*(double s, const VehicleState& a);

/// Reference motion produced by the planner. Sway velocity and sway
/// acceleration are identically zero.
struct ReferenceState {
  Vec3 eta = Vec3::Zero();
  Vec3 nu = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

ReferenceState operator+(const ReferenceState& a, const ReferenceState& b);
ReferenceState operator*(double s, const ReferenceState& a);

/// Piecewise-constant signal. Segment i holds `values[i]` on
/// [starts[i], starts[i+1]); the last segment extends forever.
class Schedule {
 public:
  Schedule() = default;
  Schedule(std::vector<double> starts, std::vector<double> values);

  static Schedule constant(double value) { return Schedule({0.0}, {value}); }

  double at(double t) const;

  const std::vector<double>& starts() const { return starts_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> starts_{0.0};
  std::vector<double> values_{0.0};
};

/// Reference-acceleration profile and planner initial condition.
struct ReferenceProfile {
  Schedule surge_accel;
  Schedule yaw_accel;
  Vec3 eta0 = Vec3::Zero();
  double u0 = 0.0;
  double r0 = 0.0;
  double duration = 100.0;

  ReferenceState initial_state() const;
};

/// Linear nominal model M_m nu_dot = tau - D_m nu with diagonal matrices.
struct NominalModel {
  Vec3 mass = Vec3::Ones();
  Vec3 damping = Vec3::Zero();

  static NominalModel from(const HydroParams& params);
};

struct DynamicsMatrices {
  Mat3 M;
  Mat3 C;
  Mat3 D;
};

class IntegrationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double wrap_angle(double angle);

Mat3 rotation_matrix(double psi);

DynamicsMatrices dynamics_matrices(const Vec3& nu, const HydroParams& params);

/// Unmodeled restoring terms G(nu) of the true plant.
Vec3 unmodeled_forces(const Vec3& nu);

VehicleState true_derivative(const VehicleState& x, const Vec3& tau,
                             const HydroParams& params);

VehicleState nominal_derivative(const VehicleState& x, const Vec3& tau,
                                const NominalModel& model);

inline bool all_finite(double x) { return std::isfinite(x); }
template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}
bool all_finite(const VehicleState& s);
bool all_finite(const ReferenceState& s);

/// One classical Runge-Kutta step of x_dot = field(x). Throws
/// IntegrationDiverged when the result is not finite.
template <typename State, typename Field>
State rk4_step(const State& x, double dt, Field&& field) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  const State k1 = field(x);
  const State k2 = field(State(x + (0.5 * dt) * k1));
  const State k3 = field(State(x + (0.5 * dt) * k2));
  const State k4 = field(State(x + dt * k3));
  State next = x + (dt / 6.0) * State(k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!all_finite(next)) throw IntegrationDiverged("integration produced a non-finite state");
  return next;
}

/// Plant step with the input held constant over dt.
VehicleState integrate_true(const VehicleState& x, const Vec3& tau, double dt,
                            const HydroParams& params);
VehicleState integrate_nominal(const VehicleState& x, const Vec3& tau, double dt,
                               const NominalModel& model);

/// Advances the motion planner eta_r' = R(psi_r) nu_r, nu_r' = a_r with the
/// acceleration in `ref` held over dt.
ReferenceState planner_step(const ReferenceState& ref, double dt);

/// Reference acceleration (u_r', 0, r_r') at time t.
Vec3 reference_profile(double t, const ReferenceProfile& profile);

}  // namespace mrrl
