#include "mrrl/dynamics.hpp"

#include <algorithm>
#include <numbers>

namespace mrrl {

Mat3 HydroParams::inertia() const {
  const double m11 = m - Xudot;
  const double m22 = m - Yvdot;
  const double m23 = m * xg - Yrdot;
  const double m33 = Iz - Nrdot;
  Mat3 M;
  M << m11, 0.0, 0.0,
       0.0, m22, m23,
       0.0, m23, m33;
  return M;
}

Eigen::Matrix<double, 6, 1> VehicleState::stacked() const {
  Eigen::Matrix<double, 6, 1> out;
  out << eta, nu;
  return out;
}

VehicleState operator+(const VehicleState& a, const VehicleState& b) {
  return {a.eta + b.eta, a.nu + b.nu};
}

VehicleState operator*(double s, const VehicleState& a) { return {s * a.eta, s * a.nu}; }

ReferenceState operator+(const ReferenceState& a, const ReferenceState& b) {
  return {a.eta + b.eta, a.nu + b.nu, a.accel + b.accel};
}

ReferenceState operator*(double s, const ReferenceState& a) {
  return {s * a.eta, s * a.nu, s * a.accel};
}

bool all_finite(const VehicleState& s) { return s.eta.allFinite() && s.nu.allFinite(); }

bool all_finite(const ReferenceState& s) {
  return s.eta.allFinite() && s.nu.allFinite() && s.accel.allFinite();
}

Schedule::Schedule(std::vector<double> starts, std::vector<double> values)
    : starts_(std::move(starts)), values_(std::move(values)) {
  if (starts_.empty() || starts_.size() != values_.size())
    throw std::invalid_argument("schedule needs one value per breakpoint");
  if (starts_.front() > 0.0)
    throw std::invalid_argument("schedule must cover t = 0");
  for (std::size_t i = 1; i < starts_.size(); ++i) {
    if (!(starts_[i] > starts_[i - 1]))
      throw std::invalid_argument("schedule breakpoints must be strictly increasing");
  }
}

double Schedule::at(double t) const {
  // RK4 stages land on t + dt/2 sums that can miss a breakpoint by an ulp.
  constexpr double eps = 1e-9;
  auto it = std::upper_bound(starts_.begin(), starts_.end(), t + eps);
  if (it == starts_.begin()) return values_.front();
  return values_[static_cast<std::size_t>(it - starts_.begin()) - 1];
}

ReferenceState ReferenceProfile::initial_state() const {
  ReferenceState ref;
  ref.eta = eta0;
  ref.nu = Vec3(u0, 0.0, r0);
  ref.accel = reference_profile(0.0, *this);
  return ref;
}

NominalModel NominalModel::from(const HydroParams& p) {
  const Mat3 M = p.inertia();
  NominalModel nm;
  nm.mass = Vec3(M(0, 0), M(1, 1), M(2, 2));
  nm.damping = Vec3(-p.Xu, -p.Yv, -p.Nr);
  return nm;
}

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

Mat3 rotation_matrix(double psi) {
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  Mat3 R;
  R << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return R;
}

DynamicsMatrices dynamics_matrices(const Vec3& nu, const HydroParams& p) {
  DynamicsMatrices out;
  out.M = p.inertia();
  const double m11 = out.M(0, 0);
  const double m22 = out.M(1, 1);
  const double m23 = out.M(1, 2);
  const double m33 = out.M(2, 2);
  if (!(m11 > 0.0 && m22 > 0.0 && m22 * m33 - m23 * m23 > 0.0))
    throw std::invalid_argument("inertia matrix is not positive definite");

  const double u = nu(0), v = nu(1), r = nu(2);
  const double au = std::abs(u), av = std::abs(v), ar = std::abs(r);

  const double c13 = -m22 * v - m23 * r;
  const double c23 = m11 * u;
  out.C << 0.0, 0.0, c13,
           0.0, 0.0, c23,
           -c13, -c23, 0.0;

  const double d11 = -p.Xu - p.Xuu * au - p.Xuuu * u * u;
  const double d22 = -p.Yv - p.Yvv * av - p.Yrv * ar;
  const double d23 = -p.Yr - p.Yvr * av - p.Yrr * ar;
  const double d32 = -p.Nv - p.Nvv * av - p.Nrv * ar;
  const double d33 = -p.Nr - p.Nvr * av - p.Nrr * ar;
  out.D << d11, 0.0, 0.0,
           0.0, d22, d23,
           0.0, d32, d33;
  return out;
}

Vec3 unmodeled_forces(const Vec3& nu) {
  const double u = nu(0), v = nu(1), r = nu(2);
  return {0.279 * u * v * v + 0.342 * v * v * r,
          0.912 * u * u * v,
          0.156 * u * r * r + 0.278 * u * r * v * v * v};
}

VehicleState true_derivative(const VehicleState& x, const Vec3& tau, const HydroParams& params) {
  const DynamicsMatrices mats = dynamics_matrices(x.nu, params);
  VehicleState d;
  d.eta = rotation_matrix(x.eta(2)) * x.nu;
  d.nu = mats.M.ldlt().solve(tau - (mats.C + mats.D) * x.nu - unmodeled_forces(x.nu));
  return d;
}

VehicleState nominal_derivative(const VehicleState& x, const Vec3& tau, const NominalModel& model) {
  VehicleState d;
  d.eta = rotation_matrix(x.eta(2)) * x.nu;
  d.nu = (tau - model.damping.cwiseProduct(x.nu)).cwiseQuotient(model.mass);
  return d;
}

VehicleState integrate_true(const VehicleState& x, const Vec3& tau, double dt,
                            const HydroParams& params) {
  return rk4_step(x, dt, [&](const VehicleState& s) { return true_derivative(s, tau, params); });
}

VehicleState integrate_nominal(const VehicleState& x, const Vec3& tau, double dt,
                               const NominalModel& model) {
  return rk4_step(x, dt, [&](const VehicleState& s) { return nominal_derivative(s, tau, model); });
}

ReferenceState planner_step(const ReferenceState& ref, double dt) {
  const Vec3 accel(ref.accel(0), 0.0, ref.accel(2));
  auto field = [&](const ReferenceState& s) {
    ReferenceState d;
    d.eta = rotation_matrix(s.eta(2)) * s.nu;
    d.nu = accel;
    d.accel = Vec3::Zero();
    return d;
  };
  ReferenceState next = rk4_step(ref, dt, field);
  next.nu(1) = 0.0;
  next.accel = accel;
  return next;
}

Vec3 reference_profile(double t, const ReferenceProfile& profile) {
  if (t < 0.0) throw std::invalid_argument("reference_profile: negative time");
  return {profile.surge_accel.at(t), 0.0, profile.yaw_accel.at(t)};
}

}  // namespace mrrl
