#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mrrl/checks.hpp"
#include "mrrl/config.hpp"
#include "mrrl/runs.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  int scenario = 0;
  std::vector<std::uint64_t> seeds;
  std::string config;
  std::string out;
  std::string checkpoint;
  bool no_baseline = false;
  bool desk_scale = false;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--scenario", o.scenario, "Scenario id (1-4)")->check(CLI::Range(1, 4));
  cmd->add_option("--seed", o.seeds, "Seed; repeat for several")->take_all();
  cmd->add_option("--config", o.config, "JSON config overlaid on the preset")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_flag("--no-baseline", o.no_baseline, "Disable the baseline controller (plain RL)");
  cmd->add_flag("--desk-scale", o.desk_scale, "Use the reduced training budget");
}

mrrl::RunConfig build_config(const Options& o) {
  mrrl::json overrides = mrrl::json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    overrides = mrrl::json::parse(in);
  }
  const int scenario = o.scenario ? o.scenario : overrides.value("scenario", 1);
  const bool desk = o.desk_scale || overrides.value("desk_scale", false);
  overrides["scenario"] = scenario;
  overrides["desk_scale"] = desk;
  if (!o.seeds.empty()) overrides["seeds"] = o.seeds;
  if (o.no_baseline) overrides["env"]["use_baseline"] = false;
  return mrrl::resolve_config(overrides, scenario, desk);
}

fs::path output_dir(const Options& o, const std::string& command) {
  if (!o.out.empty()) return o.out;
  const char* root = std::getenv("MRRL_OUTPUT_ROOT");
  return fs::path(root && *root ? root : "runs") / command;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-reference reinforcement learning for vessel tracking control"};
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "Train policies for every seed");
  add_common(train, o);
  train->add_option("--checkpoint", o.checkpoint, "Resume from this checkpoint")->check(CLI::ExistingFile);
  train->add_flag("-v,--verbose", o.verbose, "Print progress every 10 episodes");

  auto* eval = app.add_subcommand("eval", "Deterministic evaluation rollout");
  add_common(eval, o);
  eval->add_option("--checkpoint", o.checkpoint, "Policy checkpoint; omit for the baseline alone")
      ->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate over the collision-sensitivity values");
  add_common(sweep, o);
  sweep->add_flag("-v,--verbose", o.verbose, "Print progress every 10 episodes");

  auto* verify = app.add_subcommand("verify", "Run the numerical and tabular checks");
  verify->add_option("--seed", o.seeds, "Seed for the random instances");
  verify->add_option("--out", o.out, "Directory for report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (verify->parsed()) {
      const std::uint64_t seed = o.seeds.empty() ? 1 : o.seeds.front();
      const auto checks = mrrl::run_all_checks(seed);
      mrrl::json report = mrrl::json::array();
      bool ok = true;
      for (const auto& c : checks) {
        std::cout << mrrl::format_check(c) << '\n';
        report.push_back({{"name", c.name}, {"measured", c.measured}, {"threshold", c.threshold},
                          {"passed", c.passed}, {"detail", c.detail}});
        ok = ok && c.passed;
      }
      if (!o.out.empty()) {
        fs::create_directories(o.out);
        std::ofstream(fs::path(o.out) / "report.json") << report.dump(2) << '\n';
      }
      return ok ? 0 : 1;
    }

    mrrl::RunConfig cfg = build_config(o);
    const mrrl::TrainOptions topts{o.checkpoint.empty() ? std::nullopt : std::optional<fs::path>(o.checkpoint),
                                   !o.verbose};
    if (train->parsed()) {
      cfg.mode = "train";
      const fs::path out = output_dir(o, "train");
      const auto results = mrrl::run_train(cfg, out, topts);
      for (const auto& r : results) {
        double tail = 0.0;
        const std::size_t n = std::min<std::size_t>(10, r.curve.size());
        for (std::size_t i = r.curve.size() - n; i < r.curve.size(); ++i) tail += r.curve[i].ret;
        std::cout << "seed " << r.seed << ": " << r.curve.size() << " episodes, mean return of last " << n << " "
                  << (n ? tail / n : 0.0) << ", checkpoint " << r.final_checkpoint.string() << '\n';
      }
    } else if (eval->parsed()) {
      cfg.mode = "eval";
      const fs::path out = output_dir(o, "eval");
      const std::optional<fs::path> ckpt = o.checkpoint.empty() ? std::nullopt : std::optional<fs::path>(o.checkpoint);
      const mrrl::EvalMetrics m = mrrl::run_eval(cfg, ckpt, out);
      std::cout << "mean distance error [" << cfg.eval_window_start << " s, end]: " << m.mean_distance_error << '\n'
                << "max distance error: " << m.max_distance_error << '\n';
      if (!m.obstacle_clearance.empty()) std::cout << "min clearance: " << m.min_clearance << '\n';
      std::cout << "written to " << out.string() << '\n';
    } else if (sweep->parsed()) {
      cfg.mode = "sweep";
      const fs::path out = output_dir(o, "sweep");
      for (const auto& e : mrrl::run_sweep(cfg, out, topts))
        std::cout << "c " << e.c << " seed " << e.seed << ": min clearance " << e.metrics.min_clearance
                  << ", mean distance error " << e.metrics.mean_distance_error << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
