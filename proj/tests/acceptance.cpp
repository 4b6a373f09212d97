// Acceptance suite: one PASS/FAIL line per criterion. Training-based
// criteria run the desk-scale presets end to end and take tens of minutes.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "mrrl/checkpoint.hpp"
#include "mrrl/checks.hpp"
#include "mrrl/config.hpp"
#include "mrrl/runs.hpp"

namespace fs = std::filesystem;
using namespace mrrl;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string summary;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

Outcome from_checks(const std::vector<Check>& checks, double runtime, double budget) {
  Outcome o{runtime < budget, {}};
  for (const Check& c : checks) {
    o.passed = o.passed && c.passed;
    o.summary += (o.summary.empty() ? "" : "; ") + c.name + " " + fmt(c.measured);
  }
  o.summary += "; " + fmt(runtime, 3) + " s";
  return o;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double tail_return(const std::vector<EpisodeRecord>& curve, std::size_t n) {
  n = std::min(n, curve.size());
  double s = 0.0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) s += curve[i].ret;
  return s / static_cast<double>(n);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

struct ScenarioOneRuns {
  std::vector<SeedResult> composite;
  std::vector<SeedResult> plain;
  double runtime = 0.0;
};

ScenarioOneRuns train_scenario_one(const fs::path& root) {
  ScenarioOneRuns runs;
  const auto t0 = Clock::now();
  RunConfig with = preset(1, true);
  RunConfig without = with;
  without.env.use_baseline = false;
  for (std::uint64_t seed : kSeeds) {
    runs.composite.push_back(train_seed(with, seed, root / "s1_baseline" / std::to_string(seed)));
    std::cerr << "  scenario 1 seed " << seed << " with baseline done (" << fmt(seconds_since(t0), 4) << " s)\n";
    runs.plain.push_back(train_seed(without, seed, root / "s1_plain" / std::to_string(seed)));
    std::cerr << "  scenario 1 seed " << seed << " plain RL done (" << fmt(seconds_since(t0), 4) << " s)\n";
  }
  runs.runtime = seconds_since(t0);
  return runs;
}

Outcome criterion_6(const ScenarioOneRuns& runs) {
  int wins = 0;
  std::string detail;
  for (std::size_t i = 0; i < kSeeds.size(); ++i) {
    const double a = tail_return(runs.composite[i].curve, 10);
    const double b = tail_return(runs.plain[i].curve, 10);
    if (a >= b) ++wins;
    detail += "seed " + std::to_string(kSeeds[i]) + " " + fmt(a) + " vs " + fmt(b) + "; ";
  }
  return {wins >= 2 && runs.runtime < 1800.0,
          detail + std::to_string(wins) + "/3 seeds; " + fmt(runs.runtime, 4) + " s"};
}

Outcome criterion_7(const ScenarioOneRuns& runs) {
  const RunConfig cfg = preset(1, true);
  const double baseline = trajectory_metrics(rollout(cfg, nullptr), cfg.eval_window_start).mean_distance_error;
  int better = 0;
  std::string detail = "baseline only " + fmt(baseline) + "; ";
  for (const SeedResult& r : runs.composite) {
    Trainer policy = load_policy(cfg, r.final_checkpoint);
    const double e = trajectory_metrics(rollout(cfg, &policy), cfg.eval_window_start).mean_distance_error;
    if (e < baseline) ++better;
    detail += "seed " + std::to_string(r.seed) + " " + fmt(e) + "; ";
  }
  return {better * 2 > static_cast<int>(runs.composite.size()), detail + std::to_string(better) + "/3 seeds better"};
}

Outcome criterion_8(const fs::path& root) {
  const auto t0 = Clock::now();
  std::vector<double> clear_sharp, clear_soft;
  for (double c : {25.0, 0.25}) {
    RunConfig cfg = preset(2, true);
    for (Obstacle& o : cfg.env.scenario.obstacles) o.c = c;
    for (std::uint64_t seed : kSeeds) {
      const SeedResult r = train_seed(cfg, seed, root / ("s2_c" + fmt(c)) / std::to_string(seed));
      Trainer policy = load_policy(cfg, r.final_checkpoint);
      const double clear = trajectory_metrics(rollout(cfg, &policy), cfg.eval_window_start).min_clearance;
      (c > 1.0 ? clear_sharp : clear_soft).push_back(clear);
      std::cerr << "  scenario 2 c " << c << " seed " << seed << " clearance " << clear << " ("
                << fmt(seconds_since(t0), 4) << " s)\n";
    }
  }
  const int positive = static_cast<int>(std::count_if(clear_sharp.begin(), clear_sharp.end(), [](double d) { return d > 0.0; }));
  const double m_soft = median(clear_soft), m_sharp = median(clear_sharp);
  std::string detail = "c=25 clearances";
  for (double d : clear_sharp) detail += " " + fmt(d);
  detail += "; c=0.25 clearances";
  for (double d : clear_soft) detail += " " + fmt(d);
  detail += "; " + std::to_string(positive) + "/3 positive at c=25; median " + fmt(m_soft) + " (c=0.25) vs " +
            fmt(m_sharp) + " (c=25); " + fmt(seconds_since(t0), 4) + " s";
  return {positive >= 2 && m_soft >= m_sharp, detail};
}

Outcome criterion_9(const fs::path& root) {
  RunConfig cfg = preset(1, true);
  cfg.sac.episodes = 6;
  cfg.sac.checkpoint_every = 0;
  const SeedResult a = train_seed(cfg, 11, root / "det_a");
  const SeedResult b = train_seed(cfg, 11, root / "det_b");
  const bool curves = read_file(a.curve_path) == read_file(b.curve_path) && !read_file(a.curve_path).empty();
  const bool ckpts = read_file(a.final_checkpoint) == read_file(b.final_checkpoint);

  Trainer t = load_policy(cfg, a.final_checkpoint);
  const std::string first = serialize_checkpoint(t);
  Trainer u(cfg.sac, cfg.env.tau_max, 999);
  deserialize_checkpoint(first, u);
  const bool round_trip = serialize_checkpoint(u) == first && first == read_file(a.final_checkpoint);
  return {curves && ckpts && round_trip, std::string("learning curves ") + (curves ? "identical" : "differ") +
                                             "; final checkpoints " + (ckpts ? "identical" : "differ") +
                                             "; round trip " + (round_trip ? "bit-exact" : "differs")};
}

Outcome criterion_11(const ScenarioOneRuns& runs) {
  const RunConfig cfg = preset(1, true);
  int count = 0, ok = 0;
  double worst = 0.0;
  for (const SeedResult& r : runs.composite) {
    std::vector<fs::path> all = r.checkpoints;
    all.push_back(r.final_checkpoint);
    for (const fs::path& p : all) {
      Trainer policy = load_policy(cfg, p);
      const EvalMetrics m = trajectory_metrics(rollout(cfg, &policy), cfg.eval_window_start);
      ++count;
      worst = std::max(worst, m.max_reference_error);
      const int expected = static_cast<int>(std::lround(cfg.env.scenario.eval_profile.duration / cfg.env.dt));
      if (!m.diverged && m.steps == expected && m.max_reference_error < 5.0) ++ok;
    }
  }
  return {count > 0 && ok == count,
          std::to_string(ok) + "/" + std::to_string(count) + " checkpoints bounded; worst tracking error " + fmt(worst)};
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "mrrl_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
  auto timed = [](auto fn, double budget) {
    return [fn, budget] {
      const auto t0 = Clock::now();
      const auto checks = fn();
      return from_checks(checks, seconds_since(t0), budget);
    };
  };
  criteria.emplace_back("gradient fidelity", timed([] { return check_gradients(1); }, 60.0));
  criteria.emplace_back("soft backup contraction", timed([] { return check_contraction(1); }, 60.0));
  criteria.emplace_back("policy iteration monotonicity", timed([] { return check_policy_iteration(1); }, 120.0));
  criteria.emplace_back("closest-approach geometry", timed([] { return check_geometry(1); }, 60.0));
  criteria.emplace_back("baseline admissibility", timed([] { return check_baseline(1); }, 120.0));

  ScenarioOneRuns s1;
  bool s1_ready = false;
  auto scenario_one = [&]() -> const ScenarioOneRuns& {
    if (!s1_ready) {
      s1 = train_scenario_one(root);
      s1_ready = true;
    }
    return s1;
  };
  criteria.emplace_back("model-reference advantage", [&] { return criterion_6(scenario_one()); });
  criteria.emplace_back("tracking improvement", [&] { return criterion_7(scenario_one()); });
  criteria.emplace_back("collision avoidance and c-sweep", [&] { return criterion_8(root); });
  criteria.emplace_back("determinism", [&] { return criterion_9(root); });
  criteria.emplace_back("numerics", timed([] { return check_numerics(1); }, 60.0));
  criteria.emplace_back("stability of intermediate policies", [&] { return criterion_11(scenario_one()); });

  int failures = 0;
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.passed) ++failures;
    std::string line = std::string(o.passed ? "PASS" : "FAIL") + " criterion " + std::to_string(i + 1) + " (" +
                       criteria[i].first + "): " + o.summary;
    std::cout << line << std::endl;
    lines.push_back(line);
  }
  std::cout << "\nsummary\n";
  for (const auto& l : lines) std::cout << l.substr(0, l.find(':')) << '\n';
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
