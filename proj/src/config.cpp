#include "mrrl/config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <openssl/sha.h>

namespace mrrl {

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> json_vec(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N)
    throw std::invalid_argument(std::string(what) + " must be an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range json_range(const json& j, const char* what) {
  const Vec2 v = json_vec<2>(j, what);
  return {v(0), v(1)};
}

json ranges_json(const InitialRanges& r) {
  return {{"dx", range_json(r.dx)},       {"dy", range_json(r.dy)},
          {"dpsi", range_json(r.dpsi)},   {"u", range_json(r.u)},
          {"start_time", range_json(r.start_time)}};
}

InitialRanges json_ranges(const json& j) {
  InitialRanges r;
  r.dx = json_range(j.at("dx"), "dx");
  r.dy = json_range(j.at("dy"), "dy");
  r.dpsi = json_range(j.at("dpsi"), "dpsi");
  r.u = json_range(j.at("u"), "u");
  r.start_time = json_range(j.at("start_time"), "start_time");
  return r;
}

json schedule_json(const Schedule& s) { return {{"starts", s.starts()}, {"values", s.values()}}; }

Schedule json_schedule(const json& j) {
  return Schedule(j.at("starts").get<std::vector<double>>(), j.at("values").get<std::vector<double>>());
}

json profile_json(const ReferenceProfile& p) {
  return {{"surge_accel", schedule_json(p.surge_accel)},
          {"yaw_accel", schedule_json(p.yaw_accel)},
          {"eta0", vec_json(p.eta0)},
          {"u0", p.u0},
          {"r0", p.r0},
          {"duration", p.duration}};
}

ReferenceProfile json_profile(const json& j) {
  ReferenceProfile p;
  p.surge_accel = json_schedule(j.at("surge_accel"));
  p.yaw_accel = json_schedule(j.at("yaw_accel"));
  p.eta0 = json_vec<3>(j.at("eta0"), "eta0");
  p.u0 = j.at("u0").get<double>();
  p.r0 = j.at("r0").get<double>();
  p.duration = j.at("duration").get<double>();
  return p;
}

json obstacle_json(const Obstacle& o) {
  return {{"position", vec_json(o.position)}, {"velocity", vec_json(o.velocity)},
          {"radius", o.radius},               {"safe_radius", o.safe_radius},
          {"q_c", o.q_c},                     {"c", o.c}};
}

Obstacle json_obstacle(const json& j) {
  Obstacle o;
  o.position = json_vec<2>(j.at("position"), "obstacle position");
  o.velocity = json_vec<2>(j.value("velocity", json::array({0.0, 0.0})), "obstacle velocity");
  o.radius = j.at("radius").get<double>();
  o.safe_radius = j.at("safe_radius").get<double>();
  o.q_c = j.value("q_c", 1.0);
  o.c = j.value("c", 25.0);
  return o;
}

json hydro_json(const HydroParams& p) {
  return {{"m", p.m},         {"Iz", p.Iz},       {"xg", p.xg},       {"Xudot", p.Xudot},
          {"Xu", p.Xu},       {"Xuu", p.Xuu},     {"Xuuu", p.Xuuu},   {"Yvdot", p.Yvdot},
          {"Yv", p.Yv},       {"Yvv", p.Yvv},     {"Yrv", p.Yrv},     {"Yrdot", p.Yrdot},
          {"Yr", p.Yr},       {"Yvr", p.Yvr},     {"Yrr", p.Yrr},     {"Nv", p.Nv},
          {"Nvv", p.Nvv},     {"Nrv", p.Nrv},     {"Nrdot", p.Nrdot}, {"Nr", p.Nr},
          {"Nvr", p.Nvr},     {"Nrr", p.Nrr}};
}

HydroParams json_hydro(const json& j) {
  HydroParams p;
  double* fields[] = {&p.m,   &p.Iz,  &p.xg,  &p.Xudot, &p.Xu,  &p.Xuu, &p.Xuuu, &p.Yvdot,
                      &p.Yv,  &p.Yvv, &p.Yrv, &p.Yrdot, &p.Yr,  &p.Yvr, &p.Yrr,  &p.Nv,
                      &p.Nvv, &p.Nrv, &p.Nrdot, &p.Nr,  &p.Nvr, &p.Nrr};
  const char* names[] = {"m",  "Iz",  "xg",  "Xudot", "Xu", "Xuu", "Xuuu", "Yvdot",
                         "Yv", "Yvv", "Yrv", "Yrdot", "Yr", "Yvr", "Yrr",  "Nv",
                         "Nvv", "Nrv", "Nrdot", "Nr", "Nvr", "Nrr"};
  for (std::size_t i = 0; i < std::size(names); ++i) *fields[i] = j.at(names[i]).get<double>();
  return p;
}

json sac_json(const SacConfig& s) {
  return {{"gamma", s.gamma},
          {"lr_q", s.lr_q},
          {"lr_pi", s.lr_pi},
          {"lr_alpha", s.lr_alpha},
          {"polyak", s.polyak},
          {"batch_size", s.batch_size},
          {"replay_capacity", s.replay_capacity},
          {"episodes", s.episodes},
          {"steps_per_episode", s.steps_per_episode},
          {"hidden", s.hidden},
          {"target_entropy", s.target_entropy},
          {"initial_alpha", s.initial_alpha},
          {"bootstrap_episodes", s.bootstrap_episodes},
          {"bootstrap_sweeps", s.bootstrap_sweeps},
          {"updates_per_step", s.updates_per_step},
          {"convergence_threshold", s.convergence_threshold},
          {"convergence_window", s.convergence_window},
          {"checkpoint_every", s.checkpoint_every}};
}

SacConfig json_sac(const json& j) {
  SacConfig s;
  s.gamma = j.at("gamma").get<double>();
  s.lr_q = j.at("lr_q").get<double>();
  s.lr_pi = j.at("lr_pi").get<double>();
  s.lr_alpha = j.at("lr_alpha").get<double>();
  s.polyak = j.at("polyak").get<double>();
  s.batch_size = j.at("batch_size").get<int>();
  s.replay_capacity = j.at("replay_capacity").get<std::size_t>();
  s.episodes = j.at("episodes").get<int>();
  s.steps_per_episode = j.at("steps_per_episode").get<int>();
  s.hidden = j.at("hidden").get<std::vector<int>>();
  s.target_entropy = j.at("target_entropy").get<double>();
  s.initial_alpha = j.at("initial_alpha").get<double>();
  s.bootstrap_episodes = j.at("bootstrap_episodes").get<int>();
  s.bootstrap_sweeps = j.at("bootstrap_sweeps").get<int>();
  s.updates_per_step = j.at("updates_per_step").get<int>();
  s.convergence_threshold = j.at("convergence_threshold").get<double>();
  s.convergence_window = j.at("convergence_window").get<int>();
  s.checkpoint_every = j.at("checkpoint_every").get<int>();
  return s;
}

}  // namespace

void RunConfig::validate() const {
  if (scenario < 1 || scenario > 4) throw std::invalid_argument("scenario must be 1, 2, 3 or 4");
  if (mode != "train" && mode != "eval" && mode != "verify" && mode != "sweep")
    throw std::invalid_argument("mode must be train, eval, verify or sweep");
  if (mode == "train" && seeds.empty()) throw std::invalid_argument("training needs at least one seed");
  if (mode == "sweep" && sweep_c.empty()) throw std::invalid_argument("sweep needs at least one c value");
  for (double c : sweep_c)
    if (!(c > 0.0)) throw std::invalid_argument("sweep c values must be positive");
  sac.validate();
  Environment probe(train_env());
  Environment probe_eval(eval_env());
}

EnvConfig RunConfig::train_env() const {
  EnvConfig e = env;
  e.steps = sac.steps_per_episode;
  e.evaluation = false;
  return e;
}

EnvConfig RunConfig::eval_env() const {
  EnvConfig e = env;
  e.evaluation = true;
  e.steps = static_cast<int>(std::lround(env.scenario.eval_profile.duration / env.dt));
  return e;
}

RunConfig preset(int scenario, bool desk_scale) {
  if (scenario < 1 || scenario > 4) throw std::invalid_argument("scenario must be 1, 2, 3 or 4");
  RunConfig cfg;
  cfg.scenario = scenario;
  cfg.desk_scale = desk_scale;
  cfg.env.scenario = make_scenario(scenario == 4 ? 2 : scenario);
  cfg.env.scenario.id = scenario;
  cfg.sac.convergence_threshold = 0.0;
  if (desk_scale) {
    cfg.sac.episodes = scenario == 1 ? 150 : 300;
    cfg.sac.steps_per_episode = 200;
    cfg.sac.initial_alpha = 0.002;
    cfg.sac.checkpoint_every = scenario == 1 ? 15 : 30;
    cfg.env.scenario.ranges.start_time = {0.0, 80.0};
  } else {
    cfg.sac.checkpoint_every = 50;
  }
  return cfg;
}

json to_json(const RunConfig& c) {
  json obstacles = json::array();
  for (const Obstacle& o : c.env.scenario.obstacles) obstacles.push_back(obstacle_json(o));
  return {
      {"scenario", c.scenario},
      {"desk_scale", c.desk_scale},
      {"mode", c.mode},
      {"seeds", c.seeds},
      {"hydro", hydro_json(c.env.hydro)},
      {"baseline", {{"k1", vec_json(c.env.gains.k1)}, {"k2", vec_json(c.env.gains.k2)}}},
      {"reward", {{"h1", vec_json(c.env.weights.h1)}, {"h2", vec_json(c.env.weights.h2)}}},
      {"env",
       {{"dt", c.env.dt},
        {"tau_max", vec_json(c.env.tau_max)},
        {"use_baseline", c.env.use_baseline},
        {"divergence_radius", c.env.divergence_radius},
        {"detection_radius", c.env.scenario.detection_radius},
        {"vessel_radius", c.env.scenario.vessel_radius},
        {"initial_ranges", ranges_json(c.env.scenario.ranges)},
        {"eval_initial", ranges_json(c.env.scenario.eval_initial)}}},
      {"profile", {{"train", profile_json(c.env.scenario.train_profile)},
                   {"eval", profile_json(c.env.scenario.eval_profile)}}},
      {"obstacles", obstacles},
      {"sac", sac_json(c.sac)},
      {"sweep", {{"c_values", c.sweep_c}}},
      {"eval", {{"window_start", c.eval_window_start}}},
  };
}

RunConfig from_json(const json& j) {
  RunConfig c;
  c.scenario = j.at("scenario").get<int>();
  c.desk_scale = j.at("desk_scale").get<bool>();
  c.mode = j.at("mode").get<std::string>();
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.env.hydro = json_hydro(j.at("hydro"));
  c.env.gains.k1 = json_vec<3>(j.at("baseline").at("k1"), "baseline.k1");
  c.env.gains.k2 = json_vec<3>(j.at("baseline").at("k2"), "baseline.k2");
  c.env.weights.h1 = json_vec<6>(j.at("reward").at("h1"), "reward.h1");
  c.env.weights.h2 = json_vec<2>(j.at("reward").at("h2"), "reward.h2");
  const json& e = j.at("env");
  c.env.dt = e.at("dt").get<double>();
  c.env.tau_max = json_vec<2>(e.at("tau_max"), "env.tau_max");
  c.env.use_baseline = e.at("use_baseline").get<bool>();
  c.env.divergence_radius = e.at("divergence_radius").get<double>();
  Scenario& s = c.env.scenario;
  s.id = c.scenario;
  s.detection_radius = e.at("detection_radius").get<double>();
  s.vessel_radius = e.at("vessel_radius").get<double>();
  s.ranges = json_ranges(e.at("initial_ranges"));
  s.eval_initial = json_ranges(e.at("eval_initial"));
  s.train_profile = json_profile(j.at("profile").at("train"));
  s.eval_profile = json_profile(j.at("profile").at("eval"));
  s.obstacles.clear();
  for (const json& o : j.at("obstacles")) s.obstacles.push_back(json_obstacle(o));
  c.sac = json_sac(j.at("sac"));
  c.sweep_c = j.at("sweep").at("c_values").get<std::vector<double>>();
  c.eval_window_start = j.at("eval").at("window_start").get<double>();
  return c;
}

RunConfig resolve_config(const json& overrides, int scenario, bool desk_scale) {
  if (!overrides.is_null() && !overrides.is_object()) throw std::invalid_argument("config must be a JSON object");
  const int id = overrides.is_object() ? overrides.value("scenario", scenario) : scenario;
  const bool desk = overrides.is_object() ? overrides.value("desk_scale", desk_scale) : desk_scale;
  json full = to_json(preset(id, desk));
  if (overrides.is_object()) full.merge_patch(overrides);
  RunConfig cfg;
  try {
    cfg = from_json(full);
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("invalid config: ") + ex.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, int scenario, bool desk_scale) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw std::invalid_argument("config " + path.string() + " is not valid JSON: " + ex.what());
  }
  return resolve_config(j, scenario, desk_scale);
}

std::string canonical_dump(const json& j) { return j.dump(); }

std::string content_hash(const std::string& text) {
  const std::string blob = "blob " + std::to_string(text.size()) + '\0' + text;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::ostringstream os;
  for (unsigned char b : digest) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(b);
  return os.str();
}

}  // namespace mrrl
