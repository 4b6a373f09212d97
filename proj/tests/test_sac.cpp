#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mrrl/config.hpp"
#include "mrrl/sac.hpp"

using namespace mrrl;
using doctest::Approx;

namespace {

SacConfig small_config() {
  SacConfig c;
  c.hidden = {32, 32};
  c.batch_size = 32;
  c.replay_capacity = 10000;
  c.episodes = 2;
  c.steps_per_episode = 100;
  c.bootstrap_episodes = 1;
  c.bootstrap_sweeps = 50;
  c.convergence_threshold = 0.0;
  return c;
}

Batch random_batch(int n, Rng& rng) {
  const Observation scale = observation_scale();
  Batch b;
  b.s.resize(kObservationWidth, n);
  b.s_next.resize(kObservationWidth, n);
  b.u_l.resize(kActionDim, n);
  b.r.resize(n);
  b.done = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < kObservationWidth; ++i) {
      b.s(i, j) = scale(i) * rng.normal();
      b.s_next(i, j) = scale(i) * rng.normal();
    }
    b.u_l(0, j) = rng.uniform(-2, 2);
    b.u_l(1, j) = rng.uniform(-1, 1);
    b.r(j) = -rng.uniform(0, 0.1);
  }
  return b;
}

Matrix normal_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal();
  return m;
}

bool same(const ParamList& a, const ParamList& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

// Critic Q = -slope * sum_i |u_i / tau_i - centre_i|, independent of the state.
void make_v_critic(Mlp& critic, const Vec2& centre, double slope) {
  ParamList& w = critic.weights();
  for (Matrix& m : w) m.setZero();
  const Eigen::Index bias0 = w[0].cols() - 1;
  for (int i = 0; i < 2; ++i) {
    w[0](2 * i, kObservationWidth + i) = 1.0;
    w[0](2 * i, bias0) = -centre(i);
    w[0](2 * i + 1, kObservationWidth + i) = -1.0;
    w[0](2 * i + 1, bias0) = centre(i);
  }
  for (std::size_t k = 1; k + 1 < w.size(); ++k)
    for (int i = 0; i < 4; ++i) w[k](i, i) = 1.0;
  for (int i = 0; i < 4; ++i) w.back()(0, i) = -slope;
}

}  // namespace

TEST_CASE("config validation") {
  SacConfig c;
  CHECK_NOTHROW(c.validate());
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.polyak = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 10;
  c.replay_capacity = 5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("replay memory") {
  ReplayMemory m(2);
  Rng empty(0);
  CHECK_THROWS(m.sample(1, empty));
  for (int i = 1; i <= 3; ++i) {
    Transition t;
    t.r = -i;
    m.push(t);
  }
  CHECK(m.size() == 2);
  const Batch all = m.all();
  CHECK((all.r.array() == -1.0).count() == 0);
  CHECK((all.r.array() == -2.0).count() == 1);
  CHECK((all.r.array() == -3.0).count() == 1);

  ReplayMemory ten(10);
  for (int i = 0; i < 10; ++i) {
    Transition t;
    t.r = i;
    ten.push(t);
  }
  Rng a(4), b(4);
  CHECK(ten.sample(64, a).r == ten.sample(64, b).r);

  Rng rng(11);
  std::vector<int> counts(10, 0);
  const Batch big = ten.sample(100000, rng);
  for (Eigen::Index j = 0; j < big.size(); ++j) ++counts[static_cast<std::size_t>(big.r(j))];
  const double sigma = std::sqrt(100000 * 0.1 * 0.9);
  for (int c : counts) CHECK(std::abs(c - 10000) <= 3 * sigma);
  CHECK_THROWS_AS(ReplayMemory(0), std::invalid_argument);
}

TEST_CASE("soft targets") {
  Rng rng(2);
  SacConfig c = small_config();
  const Batch b = random_batch(16, rng);
  const Matrix noise = normal_matrix(2, 16, rng);

  c.gamma = 0.0;
  Trainer myopic(c, Vec2(2, 1), 1);
  CHECK(myopic.compute_target(b, noise) == b.r);

  c.gamma = 0.99;
  Trainer t(c, Vec2(2, 1), 1);
  Batch terminal = b;
  terminal.done.setOnes();
  CHECK(t.compute_target(terminal, noise) == b.r);

  const Vector y = t.compute_target(b, noise);
  Trainer one = t;
  one.q2_target = one.q1_target;
  Trainer two = t;
  two.q1_target = two.q2_target;
  CHECK((y.array() <= one.compute_target(b, noise).array()).all());
  CHECK((y.array() <= two.compute_target(b, noise).array()).all());
  CHECK(((y.array() == one.compute_target(b, noise).array()) || (y.array() == two.compute_target(b, noise).array())).all());
}

TEST_CASE("target expectation matches the exact backup of a single state") {
  Rng rng(3);
  SacConfig c = small_config();
  Trainer t(c, Vec2(2, 1), 5);
  Batch one = random_batch(1, rng);
  const int draws = 10000;
  Batch rep;
  rep.s = one.s.replicate(1, draws);
  rep.s_next = one.s_next.replicate(1, draws);
  rep.u_l = one.u_l.replicate(1, draws);
  rep.r = one.r.replicate(draws, 1);
  rep.done = Vector::Zero(draws);
  const double mc = t.compute_target(rep, normal_matrix(2, draws, rng)).mean();

  // Expectation over the two noise dimensions by a tensor trapezoid rule.
  const int m = 161;
  const double lo = -8.0, h = 16.0 / (m - 1);
  Matrix grid(2, m * m);
  Vector weight(m * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double zi = lo + i * h, zj = lo + j * h;
      grid(0, i * m + j) = zi;
      grid(1, i * m + j) = zj;
      const double wi = (i == 0 || i == m - 1) ? 0.5 : 1.0, wj = (j == 0 || j == m - 1) ? 0.5 : 1.0;
      weight(i * m + j) = wi * wj * h * h * std::exp(-0.5 * (zi * zi + zj * zj)) / (2 * std::numbers::pi);
    }
  Batch quad;
  quad.s = one.s.replicate(1, m * m);
  quad.s_next = one.s_next.replicate(1, m * m);
  quad.u_l = one.u_l.replicate(1, m * m);
  quad.r = one.r.replicate(m * m, 1);
  quad.done = Vector::Zero(m * m);
  const double exact = t.compute_target(quad, grid).dot(weight);
  CHECK(std::abs(mc - exact) <= 1e-2);
}

TEST_CASE("critic update") {
  Rng rng(4);
  Trainer t(small_config(), Vec2(2, 1), 2);
  const Batch b = random_batch(32, rng);

  const Vector y = t.q_values(t.q1, b.s, b.u_l);
  Trainer fixed = t;
  fixed.q2 = fixed.q1;
  const ParamList before = fixed.q1.weights();
  fixed.critic_update(b, y);
  CHECK(same(fixed.q1.weights(), before));

  Vector target(32);
  for (int j = 0; j < 32; ++j) target(j) = -rng.uniform(0, 2);
  double loss = 0.0;
  for (int k = 0; k < 2000; ++k) loss = t.critic_update(b, target);
  CHECK(loss < 1e-3);
}

TEST_CASE("single-sample critic gradient for a linear critic") {
  SacConfig c = small_config();
  c.hidden = {};
  Trainer t(c, Vec2(2, 1), 3);
  Rng rng(5);
  const Batch b = random_batch(1, rng);
  const Vector y = Vector::Constant(1, -0.7);
  ParamList g;
  t.critic_loss(t.q1, b, y, &g);
  const double q = t.q_values(t.q1, b.s, b.u_l)(0);
  const Matrix x = t.critic_input(b.s, b.u_l);
  for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(g[0](0, i) == Approx((q - y(0)) * x(i, 0)).epsilon(1e-12));
  CHECK(g[0](0, x.rows()) == Approx(q - y(0)).epsilon(1e-12));

  const double h = 1e-5;
  for (Eigen::Index i = 0; i < g[0].cols(); ++i) {
    Mlp p = t.q1, m = t.q1;
    p.weights()[0](0, i) += h;
    m.weights()[0](0, i) -= h;
    const double fd = (t.critic_loss(p, b, y, nullptr) - t.critic_loss(m, b, y, nullptr)) / (2 * h);
    CHECK(fd == Approx(g[0](0, i)).epsilon(1e-6));
  }
}

TEST_CASE("actor gradient vanishes with zero temperature and a flat critic") {
  Trainer t(small_config(), Vec2(2, 1), 4);
  for (Mlp* q : {&t.q1, &t.q2}) q->weights()[0].middleCols(kObservationWidth, kActionDim).setZero();
  t.log_alpha = -1e4;
  Rng rng(6);
  const Batch b = random_batch(16, rng);
  ParamList g;
  t.actor_loss(b, normal_matrix(2, 16, rng), &g);
  for (const Matrix& m : g) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("actor loss with zero temperature is the negated critic") {
  Trainer t(small_config(), Vec2(2, 1), 4);
  t.log_alpha = -1e4;
  Rng rng(7);
  const Batch b = random_batch(16, rng);
  const Matrix noise = normal_matrix(2, 16, rng);
  const Matrix head = t.actor.forward(t.normalize(b.s));
  Matrix u(2, 16);
  for (int j = 0; j < 16; ++j) u.col(j) = sample_action(head.col(j), noise.col(j), t.tau_max()).action;
  const Vector q = t.q_values(t.q1, b.s, u).cwiseMin(t.q_values(t.q2, b.s, u));
  CHECK(t.actor_loss(b, noise, nullptr) == Approx(-q.mean()).epsilon(1e-12));
}

TEST_CASE("actor gradient matches finite differences") {
  SacConfig c = small_config();
  c.hidden = {128, 128};
  Trainer t(c, Vec2(2, 1), 8);
  Rng rng(9);
  const Batch b = random_batch(16, rng);
  const Matrix noise = normal_matrix(2, 16, rng);
  ParamList g;
  t.actor_loss(b, noise, &g);
  Vector a(300), f(300);
  for (int k = 0; k < 300; ++k) {
    const std::size_t layer = rng.index(g.size());
    const auto i = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(g[layer].rows())));
    const auto j = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(g[layer].cols())));
    double& w = t.actor.weights()[layer](i, j);
    const double w0 = w;
    w = w0 + 1e-5;
    const double lp = t.actor_loss(b, noise, nullptr);
    w = w0 - 1e-5;
    const double lm = t.actor_loss(b, noise, nullptr);
    w = w0;
    a(k) = g[layer](i, j);
    f(k) = (lp - lm) / 2e-5;
  }
  CHECK((a - f).norm() <= 1e-5 * std::max(a.norm(), f.norm()));
}

TEST_CASE("actor moves its mean towards the critic optimum") {
  SacConfig c = small_config();
  c.lr_pi = 1e-3;
  Trainer t(c, Vec2(2, 1), 10);
  const Vec2 centre(0.5, -0.4);
  make_v_critic(t.q1, centre, 1.0);
  make_v_critic(t.q2, centre, 1.0);
  t.log_alpha = std::log(1e-3);
  Rng rng(12);
  const Batch b = random_batch(64, rng);
  auto gap = [&] {
    const Matrix head = t.actor.forward(t.normalize(b.s));
    double s = 0.0;
    for (int j = 0; j < 64; ++j) {
      const Vector u = deterministic_action(head.col(j), t.tau_max());
      s += std::abs(u(0) / 2.0 - centre(0)) + std::abs(u(1) - centre(1));
    }
    return s / 64;
  };
  const double before = gap();
  for (int k = 0; k < 1500; ++k) t.actor_update(b);
  const double after = gap();
  CHECK(after < 0.1 * before);
  CHECK(after < 0.05);
}

TEST_CASE("temperature") {
  Trainer t(small_config(), Vec2(2, 1), 1);
  double g = 1.0;
  t.temperature_loss(Vector::Constant(8, 2.0), &g);
  CHECK(g == 0.0);

  const double a0 = t.log_alpha;
  t.temperature_update(Vector::Constant(8, 3.0));
  CHECK(t.log_alpha > a0);
  const double a1 = t.log_alpha;
  t.temperature_update(Vector::Constant(8, -1.0));
  CHECK(t.log_alpha < a1);
}

TEST_CASE("entropy settles at the target on a stationary task") {
  SacConfig c = small_config();
  c.lr_pi = 1e-3;
  c.lr_alpha = 3e-3;
  c.initial_alpha = 0.05;
  Trainer t(c, Vec2(2, 1), 13);
  make_v_critic(t.q1, Vec2(0.2, -0.3), 1.0);
  make_v_critic(t.q2, Vec2(0.2, -0.3), 1.0);
  Rng rng(14);
  const Batch b = random_batch(128, rng);
  for (int k = 0; k < 6000; ++k) {
    const ActorStep s = t.actor_update(b);
    t.temperature_update(s.log_prob);
  }
  Vector logp;
  t.actor_loss(b, normal_matrix(2, 128, rng), nullptr, &logp);
  double entropy = 0.0;
  for (int k = 0; k < 40; ++k) {
    t.actor_loss(b, normal_matrix(2, 128, rng), nullptr, &logp);
    entropy -= logp.mean();
  }
  entropy /= 40;
  CHECK(std::abs(entropy - c.target_entropy) < 0.3);
}

TEST_CASE("polyak averaging") {
  SacConfig c = small_config();
  Trainer t(c, Vec2(2, 1), 1);
  const ParamList before = t.q1_target.weights();
  t.polyak_update();
  CHECK(same(t.q1_target.weights(), before));

  for (Matrix& m : t.q1.weights()) m.setOnes();
  for (Matrix& m : t.q1_target.weights()) m.setZero();
  t.polyak_update();
  CHECK(t.q1_target.weights()[0](0, 0) == Approx(0.01).epsilon(1e-15));
  for (int k = 1; k < 100; ++k) t.polyak_update();
  CHECK(1.0 - t.q1_target.weights()[1](0, 0) == Approx(std::pow(0.99, 100)).epsilon(1e-12));
}

TEST_CASE("targets move only by averaging during updates") {
  Trainer t(small_config(), Vec2(2, 1), 6);
  Rng rng(15);
  const Batch b = random_batch(32, rng);
  for (int k = 0; k < 5; ++k) {
    const ParamList prev = t.q1_target.weights();
    t.update(b);
    for (std::size_t i = 0; i < prev.size(); ++i) {
      const Matrix expect = 0.01 * t.q1.weights()[i] + 0.99 * prev[i];
      CHECK((t.q1_target.weights()[i] - expect).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
  CHECK(t.updates == 5);
}

TEST_CASE("bootstrap") {
  const RunConfig cfg = preset(1, true);
  Environment env(cfg.train_env());

  Trainer fresh(cfg.sac, cfg.env.tau_max, 1);
  Trainer t = fresh;
  ReplayMemory replay(cfg.sac.replay_capacity);
  const auto none = t.bootstrap(env, replay, 0);
  CHECK(none.first == 0.0);
  CHECK(replay.size() == 0);
  CHECK(same(t.q1.weights(), fresh.q1.weights()));

  const auto [before, after] = t.bootstrap(env, replay, cfg.sac.bootstrap_episodes);
  CHECK(replay.size() == static_cast<std::size_t>(cfg.sac.bootstrap_episodes * cfg.sac.steps_per_episode));
  CHECK(after * 10.0 <= before);
  CHECK(same(t.q1.weights(), t.q1_target.weights()));
  double action_norm = 0.0;
  for (std::size_t i = 0; i < replay.size(); ++i) action_norm += replay.at(i).u_l.norm();
  CHECK(action_norm == 0.0);
}

TEST_CASE("training without gradient steps leaves the networks alone") {
  EnvConfig env_cfg;
  env_cfg.scenario = make_scenario(1);
  env_cfg.steps = 50;
  Environment env(env_cfg);
  SacConfig c = small_config();
  c.steps_per_episode = 50;
  c.episodes = 2;
  c.batch_size = 1000;
  Trainer t(c, Vec2(2, 1), 1);
  const Trainer before = t;
  ReplayMemory replay(10000);
  const auto log = t.train(env, replay);
  CHECK(log.size() == 2);
  CHECK(t.updates == 0);
  CHECK(same(t.actor.weights(), before.actor.weights()));
  CHECK(same(t.q1.weights(), before.q1.weights()));
  for (const EpisodeRecord& r : log) {
    CHECK(r.ret < 0.0);
    CHECK(r.steps == 50);
  }
}

TEST_CASE("training is bitwise deterministic over a thousand updates") {
  EnvConfig env_cfg;
  env_cfg.scenario = make_scenario(1);
  env_cfg.steps = 200;
  SacConfig c = small_config();
  c.steps_per_episode = 200;
  c.episodes = 6;
  auto run = [&] {
    Environment env(env_cfg);
    Trainer t(c, Vec2(2, 1), 77);
    ReplayMemory replay(c.replay_capacity);
    t.bootstrap(env, replay, c.bootstrap_episodes);
    const auto log = t.train(env, replay);
    return std::make_pair(t, log);
  };
  const auto [a, la] = run();
  const auto [b, lb] = run();
  CHECK(a.updates >= 1000);
  CHECK(same(a.actor.weights(), b.actor.weights()));
  CHECK(same(a.q1.weights(), b.q1.weights()));
  CHECK(same(a.q2_target.weights(), b.q2_target.weights()));
  CHECK(a.log_alpha == b.log_alpha);
  for (std::size_t i = 0; i < la.size(); ++i) CHECK(la[i].ret == lb[i].ret);
}

TEST_CASE("diverged episodes are recorded and training continues") {
  EnvConfig env_cfg;
  env_cfg.scenario = make_scenario(1);
  env_cfg.scenario.ranges.dx = {1.0, 1.0};
  env_cfg.steps = 50;
  env_cfg.divergence_radius = 1e-3;
  Environment env(env_cfg);
  SacConfig c = small_config();
  c.episodes = 3;
  Trainer t(c, Vec2(2, 1), 1);
  ReplayMemory replay(100);
  const auto log = t.train(env, replay);
  CHECK(log.size() == 3);
  for (const EpisodeRecord& r : log) {
    CHECK(r.diverged);
    CHECK(r.steps == 1);
  }
  CHECK(replay.at(0).done);
}

TEST_CASE("convergence threshold stops training early") {
  EnvConfig env_cfg;
  env_cfg.scenario = make_scenario(1);
  env_cfg.steps = 50;
  Environment env(env_cfg);
  SacConfig c = small_config();
  c.steps_per_episode = 50;
  c.episodes = 20;
  c.batch_size = 16;
  c.convergence_threshold = 1e3;
  c.convergence_window = 2;
  Trainer t(c, Vec2(2, 1), 1);
  ReplayMemory replay(10000);
  CHECK(t.train(env, replay).size() < 20);
}
