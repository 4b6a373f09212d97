#include "mrrl/baseline.hpp"

#include <stdexcept>

namespace mrrl {

void BacksteppingGains::validate() const {
  if (!(k1.minCoeff() > 0.0) || !(k2.minCoeff() > 0.0))
    throw std::invalid_argument("backstepping gains must be positive");
}

TrackingError body_frame_error(const VehicleState& x, const ReferenceState& ref) {
  const double c = std::cos(x.eta(2));
  const double s = std::sin(x.eta(2));
  const double dx = ref.eta(0) - x.eta(0);
  const double dy = ref.eta(1) - x.eta(1);
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(ref.eta(2) - x.eta(2))};
}

Vec3 baseline_control(const VehicleState& x, const ReferenceState& ref,
                      const BacksteppingGains& gains, const NominalModel& model) {
  const double kx = gains.k1(0), ky = gains.k1(1), kpsi = gains.k1(2);
  const double u = x.nu(0), v = x.nu(1), r = x.nu(2);
  const double ur = ref.nu(0), rr = ref.nu(2);
  const double ur_dot = ref.accel(0), rr_dot = ref.accel(2);

  const TrackingError e = body_frame_error(x, ref);
  const double ce = std::cos(e.epsi);
  const double se = std::sin(e.epsi);

  const double ex_dot = r * e.ey + ur * ce - u;
  const double ey_dot = -r * e.ex + ur * se - v;
  const double epsi_dot = rr - r;

  const double u_d = ur * ce + kx * e.ex;
  const double r_d = rr + ur * (ky * e.ey + kpsi * se);
  const double u_d_dot = ur_dot * ce - ur * se * epsi_dot + kx * ex_dot;
  const double r_d_dot = rr_dot + ur_dot * (ky * e.ey + kpsi * se) +
                         ur * (ky * ey_dot + kpsi * ce * epsi_dot);

  const double zu = u - u_d;
  const double zr = r - r_d;

  Vec3 tau;
  tau(0) = model.mass(0) * (u_d_dot - gains.k2(0) * zu) + model.damping(0) * u + e.ex;
  tau(1) = 0.0;
  tau(2) = model.mass(2) * (r_d_dot - gains.k2(2) * zr) + model.damping(2) * r + se / ky;
  return tau;
}

}  // namespace mrrl
