#pragma once

#include "mrrl/dynamics.hpp"

namespace mrrl {

/// Gains of the two-loop tracking controller. `k1` holds the kinematic
/// gains (along-track, cross-track, heading) and `k2` the velocity-loop
/// gains (surge, sway, yaw). Sway is unactuated so k2(1) is unused.
struct BacksteppingGains {
  Vec3 k1 = Vec3(0.5, 0.5, 0.8);
  Vec3 k2 = Vec3(2.0, 2.0, 2.0);

  void validate() const;
};

/// Tracking errors expressed in the vessel body frame.
struct TrackingError {
  double ex = 0.0;
  double ey = 0.0;
  double epsi = 0.0;
};

TrackingError body_frame_error(const VehicleState& x, const ReferenceState& ref);

/// Baseline control u_b computed on the nominal model. The sway entry is
/// always zero.
Vec3 baseline_control(const VehicleState& x, const ReferenceState& ref,
                      const BacksteppingGains& gains, const NominalModel& model);

}  // namespace mrrl
