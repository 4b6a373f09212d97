#include "mrrl/runs.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "mrrl/checkpoint.hpp"

namespace fs = std::filesystem;

namespace mrrl {

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

TrajectoryRow capture(const Environment& env) {
  TrajectoryRow row;
  row.t = env.time();
  row.plant = env.plant();
  row.nominal = env.nominal();
  row.reference = env.reference();
  row.u_b = env.baseline_action();
  row.u_l = env.last_action();
  row.tracking = env.last_tracking();
  row.collision = env.last_collision();
  const Vec2 p = env.plant().eta.head<2>();
  const double c = std::cos(env.plant().eta(2)), s = std::sin(env.plant().eta(2));
  const Vec2 v(c * env.plant().nu(0) - s * env.plant().nu(1), s * env.plant().nu(0) + c * env.plant().nu(1));
  for (const Obstacle& o : env.obstacles_now()) {
    row.d_ao.push_back((o.position - p).norm());
    row.d_it.push_back(closest_approach(p, v, o).distance);
  }
  return row;
}

std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Trajectory rollout(const RunConfig& cfg, Trainer* policy) {
  Environment env(cfg.eval_env());
  Trajectory traj;
  traj.obstacles = cfg.env.scenario.obstacles;
  traj.vessel_radius = cfg.env.scenario.vessel_radius;
  Observation obs = env.reset(std::uint64_t{0});
  traj.rows.push_back(capture(env));
  for (int k = 0; k < env.config().steps; ++k) {
    const Vec2 u = policy ? policy->act(obs, false) : Vec2::Zero();
    const StepResult res = env.step(u);
    if (res.diverged) {
      traj.diverged = true;
      break;
    }
    obs = res.obs;
    traj.rows.push_back(capture(env));
    if (res.done) break;
  }
  return traj;
}

EvalMetrics trajectory_metrics(const Trajectory& traj, double window_start) {
  EvalMetrics m;
  m.obstacle_clearance.assign(traj.obstacles.size(), std::numeric_limits<double>::infinity());
  double sum = 0.0;
  int n = 0;
  for (const TrajectoryRow& row : traj.rows) {
    const double e = (row.plant.eta.head<2>() - row.nominal.eta.head<2>()).norm();
    m.max_distance_error = std::max(m.max_distance_error, e);
    m.max_reference_error =
        std::max(m.max_reference_error, (row.plant.eta.head<2>() - row.reference.eta.head<2>()).norm());
    if (row.t >= window_start - 1e-9) {
      sum += e;
      ++n;
    }
    for (std::size_t i = 0; i < traj.obstacles.size(); ++i) {
      const double clear = row.d_ao[i] - traj.vessel_radius - traj.obstacles[i].radius;
      m.obstacle_clearance[i] = std::min(m.obstacle_clearance[i], clear);
      m.min_clearance = std::min(m.min_clearance, clear);
    }
  }
  m.mean_distance_error = n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
  m.diverged = traj.diverged;
  m.steps = traj.rows.empty() ? 0 : static_cast<int>(traj.rows.size()) - 1;
  return m;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
  std::ofstream out = open_out(path);
  out << "t,x,y,psi,u,v,r,x_m,y_m,psi_m,u_m,v_m,r_m,x_r,y_r,psi_r,u_r,v_r,r_r,"
         "tau_b_u,tau_b_r,tau_l_u,tau_l_r,reward_tracking,reward_collision";
  for (std::size_t i = 0; i < traj.obstacles.size(); ++i) out << ",d_ao_" << i << ",d_it_" << i;
  out << '\n';
  for (const TrajectoryRow& row : traj.rows) {
    std::vector<double> vals{row.t};
    for (const Vec3* v : {&row.plant.eta, &row.plant.nu, &row.nominal.eta, &row.nominal.nu,
                          &row.reference.eta, &row.reference.nu})
      vals.insert(vals.end(), v->data(), v->data() + 3);
    vals.insert(vals.end(), {row.u_b(0), row.u_b(1), row.u_l(0), row.u_l(1), row.tracking, row.collision});
    for (std::size_t i = 0; i < row.d_ao.size(); ++i) {
      vals.push_back(row.d_ao[i]);
      vals.push_back(row.d_it[i]);
    }
    for (std::size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << format_double(vals[i]);
    out << '\n';
  }
}

void write_learning_curve_csv(const fs::path& path, const std::vector<EpisodeRecord>& log) {
  std::ofstream out = open_out(path);
  out << "episode,return,J_Q,J_pi,alpha,entropy,steps,diverged\n";
  for (const EpisodeRecord& r : log) {
    out << r.episode << ',' << format_double(r.ret) << ',' << format_double(r.q_loss) << ','
        << format_double(r.pi_loss) << ',' << format_double(r.alpha) << ',' << format_double(r.entropy) << ','
        << r.steps << ',' << (r.diverged ? 1 : 0) << '\n';
  }
}

void write_manifest(const fs::path& path, const RunConfig& cfg, const json& extra) {
  const json config = to_json(cfg);
  json m = extra;
  m["config"] = config;
  m["config_hash"] = content_hash(canonical_dump(config));
  m["seeds"] = cfg.seeds;
  std::ofstream out = open_out(path);
  out << m.dump(2) << '\n';
}

SeedResult train_seed(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir, const TrainOptions& opts) {
  fs::create_directories(dir / "checkpoints");
  SeedResult res;
  res.seed = seed;
  Environment env(cfg.train_env());
  Trainer trainer(cfg.sac, cfg.env.tau_max, seed);
  ReplayMemory replay(cfg.sac.replay_capacity);
  if (opts.resume) {
    load_checkpoint(*opts.resume, trainer);
  } else if (cfg.env.use_baseline) {
    std::tie(res.bootstrap_residual_before, res.bootstrap_residual_after) =
        trainer.bootstrap(env, replay, cfg.sac.bootstrap_episodes);
  }
  const int every = cfg.sac.checkpoint_every;
  res.curve = trainer.train(env, replay, [&](const EpisodeRecord& rec, Trainer& t) {
    if (!opts.quiet && (rec.episode + 1) % 10 == 0) {
      std::cerr << "seed " << seed << " episode " << rec.episode + 1 << " return " << rec.ret << " alpha "
                << rec.alpha << '\n';
    }
    if (every > 0 && (rec.episode + 1) % every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_ep%05d.bin", rec.episode + 1);
      const fs::path p = dir / "checkpoints" / name;
      save_checkpoint(p, t);
      res.checkpoints.push_back(p);
    }
  });
  res.curve_path = dir / "learning_curve.csv";
  write_learning_curve_csv(res.curve_path, res.curve);
  res.final_checkpoint = dir / "final.ckpt";
  save_checkpoint(res.final_checkpoint, trainer);
  return res;
}

std::vector<SeedResult> run_train(const RunConfig& cfg, const fs::path& out, const TrainOptions& opts) {
  if (cfg.seeds.empty()) throw std::invalid_argument("training needs at least one seed");
  fs::create_directories(out);
  std::vector<SeedResult> results;
  json files = json::array();
  for (std::uint64_t seed : cfg.seeds) {
    results.push_back(train_seed(cfg, seed, out / seed_dir_name(seed), opts));
    const SeedResult& r = results.back();
    json entry = {{"seed", seed},
                  {"learning_curve", fs::relative(r.curve_path, out).generic_string()},
                  {"final_checkpoint", fs::relative(r.final_checkpoint, out).generic_string()},
                  {"checkpoints", json::array()},
                  {"bootstrap_residual", {r.bootstrap_residual_before, r.bootstrap_residual_after}}};
    for (const fs::path& p : r.checkpoints) entry["checkpoints"].push_back(fs::relative(p, out).generic_string());
    files.push_back(entry);
  }
  write_manifest(out / "manifest.json", cfg, {{"command", "train"}, {"runs", files}});
  write_plot_scripts(out);
  return results;
}

Trainer load_policy(const RunConfig& cfg, const fs::path& checkpoint) {
  Trainer trainer(cfg.sac, cfg.env.tau_max, 0);
  load_checkpoint(checkpoint, trainer);
  return trainer;
}

namespace {

json metrics_json(const EvalMetrics& m) {
  return {{"mean_distance_error", m.mean_distance_error},
          {"max_distance_error", m.max_distance_error},
          {"max_reference_error", m.max_reference_error},
          {"diverged", m.diverged},
          {"min_clearance", std::isfinite(m.min_clearance) ? json(m.min_clearance) : json(nullptr)},
          {"obstacle_clearance", m.obstacle_clearance},
          {"steps", m.steps}};
}

}  // namespace

EvalMetrics run_eval(const RunConfig& cfg, const std::optional<fs::path>& checkpoint, const fs::path& out) {
  fs::create_directories(out);
  std::optional<Trainer> policy;
  if (checkpoint) policy.emplace(load_policy(cfg, *checkpoint));
  const Trajectory traj = rollout(cfg, policy ? &*policy : nullptr);
  const EvalMetrics m = trajectory_metrics(traj, cfg.eval_window_start);
  write_trajectory_csv(out / "trajectory.csv", traj);
  json extra = {{"command", "eval"}, {"metrics", metrics_json(m)}};
  extra["checkpoint"] = checkpoint ? json(checkpoint->string()) : json(nullptr);
  write_manifest(out / "manifest.json", cfg, extra);
  std::ofstream mo = open_out(out / "metrics.json");
  mo << metrics_json(m).dump(2) << '\n';
  write_plot_scripts(out);
  return m;
}

std::vector<SweepEntry> run_sweep(const RunConfig& cfg, const fs::path& out, const TrainOptions& opts) {
  if (cfg.sweep_c.empty()) throw std::invalid_argument("sweep needs at least one c value");
  fs::create_directories(out);
  std::vector<SweepEntry> entries;
  json listing = json::array();
  for (double c : cfg.sweep_c) {
    RunConfig sub = cfg;
    for (Obstacle& o : sub.env.scenario.obstacles) o.c = c;
    const fs::path cdir = out / ("c_" + format_double(c));
    const auto trained = run_train(sub, cdir, opts);
    json per_seed = json::array();
    for (const SeedResult& r : trained) {
      const fs::path edir = cdir / seed_dir_name(r.seed) / "eval";
      SweepEntry e{c, r.seed, run_eval(sub, r.final_checkpoint, edir), edir};
      per_seed.push_back({{"seed", r.seed},
                          {"dir", fs::relative(edir, out).generic_string()},
                          {"min_clearance", e.metrics.min_clearance},
                          {"mean_distance_error", e.metrics.mean_distance_error}});
      entries.push_back(std::move(e));
    }
    listing.push_back({{"c", c}, {"runs", per_seed}});
  }
  std::ofstream csv = open_out(out / "sweep_summary.csv");
  csv << "c,seed,min_clearance,mean_distance_error\n";
  for (const SweepEntry& e : entries)
    csv << format_double(e.c) << ',' << e.seed << ',' << format_double(e.metrics.min_clearance) << ','
        << format_double(e.metrics.mean_distance_error) << '\n';
  write_manifest(out / "manifest.json", cfg, {{"command", "sweep"}, {"values", listing}});
  write_plot_scripts(out);
  return entries;
}

void write_plot_scripts(const fs::path& dir) {
  std::ofstream lc = open_out(dir / "plot_learning_curve.py");
  lc << R"(import sys
import pandas as pd
import matplotlib.pyplot as plt

paths = sys.argv[1:] or ["learning_curve.csv"]
fig, ax = plt.subplots()
for p in paths:
    df = pd.read_csv(p)
    ax.plot(df["episode"], df["return"], label=p)
ax.set_xlabel("episode")
ax.set_ylabel("return")
ax.legend()
fig.savefig("learning_curve.png", dpi=150)
)";
  std::ofstream tr = open_out(dir / "plot_trajectory.py");
  tr << R"(import sys
import pandas as pd
import matplotlib.pyplot as plt

df = pd.read_csv(sys.argv[1] if len(sys.argv) > 1 else "trajectory.csv")
fig, ax = plt.subplots()
ax.plot(df["x_r"], df["y_r"], "k--", label="reference")
ax.plot(df["x_m"], df["y_m"], label="nominal")
ax.plot(df["x"], df["y"], label="vessel")
ax.set_aspect("equal")
ax.legend()
fig.savefig("trajectory.png", dpi=150)

fig, axes = plt.subplots(2, 1, sharex=True)
axes[0].plot(df["t"], df["tau_b_u"] + df["tau_l_u"], label="tau_u")
axes[1].plot(df["t"], df["tau_b_r"] + df["tau_l_r"], label="tau_r")
axes[1].set_xlabel("t [s]")
fig.savefig("inputs.png", dpi=150)
)";
}

}  // namespace mrrl
