#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrrl/environment.hpp"

namespace mrrl {

/// One measured property with its threshold.
struct Check {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

/// Relative error ||a - b|| / max(||a||, ||b||) between analytic and
/// finite-difference gradients on sampled parameters of fresh 2x128 networks.
std::vector<Check> check_gradients(std::uint64_t seed, int coordinates = 400, double h = 1e-5);

/// Sup-norm contraction of the soft backup, fixed-point convergence and the value bound.
std::vector<Check> check_contraction(std::uint64_t seed, int mdps = 100, int pairs = 10);

/// Monotone improvement and termination of tabular soft policy iteration.
std::vector<Check> check_policy_iteration(std::uint64_t seed, int mdps = 100);

/// Closed-form closest approach against the brute-force oracle, and the
/// sigmoid midpoint of the collision reward.
std::vector<Check> check_geometry(std::uint64_t seed, int cases = 10000);

struct BaselineRun {
  std::vector<double> t;
  std::vector<double> error;
};

/// Baseline-only tracking of a reference from an offset start, on the nominal
/// model or the true plant. Error is the plant-to-reference position distance.
BaselineRun simulate_baseline(const ReferenceProfile& profile, const VehicleState& x0, double duration,
                              bool true_plant, const HydroParams& hydro = {},
                              const BacksteppingGains& gains = {}, double dt = 0.1);

/// Settling on the nominal model and boundedness on the true plant from random starts.
std::vector<Check> check_baseline(std::uint64_t seed, int starts = 20);

/// Integrator order, rotation orthonormality, Coriolis skew symmetry and reward sign.
std::vector<Check> check_numerics(std::uint64_t seed, int transitions = 100000);

std::vector<Check> run_all_checks(std::uint64_t seed);

std::string format_check(const Check& c);

}  // namespace mrrl
