#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mrrl/config.hpp"
#include "mrrl/sac.hpp"

namespace mrrl {

/// One row per simulation instant, the initial state included.
struct TrajectoryRow {
  double t = 0.0;
  VehicleState plant;
  VehicleState nominal;
  ReferenceState reference;
  Vec2 u_b = Vec2::Zero();
  Vec2 u_l = Vec2::Zero();
  double tracking = 0.0;
  double collision = 0.0;
  std::vector<double> d_ao;
  std::vector<double> d_it;
};

struct EvalMetrics {
  double mean_distance_error = 0.0;
  double max_distance_error = 0.0;
  double max_reference_error = 0.0;
  double min_clearance = std::numeric_limits<double>::infinity();
  std::vector<double> obstacle_clearance;
  bool diverged = false;
  int steps = 0;
};

struct Trajectory {
  std::vector<TrajectoryRow> rows;
  std::vector<Obstacle> obstacles;
  double vessel_radius = 1.0;
  bool diverged = false;
};

/// Deterministic rollout from the fixed evaluation start. With no policy the
/// learned term is zero (baseline only, or nothing at all when the config
/// disables the baseline).
Trajectory rollout(const RunConfig& cfg, Trainer* policy);
EvalMetrics trajectory_metrics(const Trajectory& traj, double window_start);

std::string format_double(double v);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
void write_learning_curve_csv(const std::filesystem::path& path, const std::vector<EpisodeRecord>& log);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<EpisodeRecord> curve;
  std::filesystem::path curve_path;
  std::filesystem::path final_checkpoint;
  std::vector<std::filesystem::path> checkpoints;
  double bootstrap_residual_before = 0.0;
  double bootstrap_residual_after = 0.0;
};

struct TrainOptions {
  std::optional<std::filesystem::path> resume;
  bool quiet = true;
};

/// Trains one seed; writes learning_curve.csv, periodic and final checkpoints
/// under `dir`.
SeedResult train_seed(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir,
                      const TrainOptions& opts = {});

/// Trains every configured seed under out/seed_<n>/ and writes out/manifest.json.
std::vector<SeedResult> run_train(const RunConfig& cfg, const std::filesystem::path& out,
                                  const TrainOptions& opts = {});

/// Builds a trainer shaped for `cfg` and loads the checkpoint into it.
Trainer load_policy(const RunConfig& cfg, const std::filesystem::path& checkpoint);

/// Writes trajectory.csv and metrics.json under `out`.
EvalMetrics run_eval(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint,
                     const std::filesystem::path& out);

struct SweepEntry {
  double c = 0.0;
  std::uint64_t seed = 0;
  EvalMetrics metrics;
  std::filesystem::path dir;
};

/// Trains and evaluates every (c, seed) pair; writes sweep_summary.csv and manifest.json.
std::vector<SweepEntry> run_sweep(const RunConfig& cfg, const std::filesystem::path& out,
                                  const TrainOptions& opts = {});

void write_manifest(const std::filesystem::path& path, const RunConfig& cfg, const json& extra);
void write_plot_scripts(const std::filesystem::path& dir);

}  // namespace mrrl
