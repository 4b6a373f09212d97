#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mrrl/environment.hpp"
#include "mrrl/neural.hpp"
#include "mrrl/random.hpp"

namespace mrrl {

struct SacConfig {
  double gamma = 0.998;
  double lr_q = 1e-3;
  double lr_pi = 1e-4;
  double lr_alpha = 1e-4;
  double polyak = 0.01;
  int batch_size = 128;
  std::size_t replay_capacity = 1000000;
  int episodes = 1000;
  int steps_per_episode = 1000;
  std::vector<int> hidden{128, 128};
  double target_entropy = -2.0;
  double initial_alpha = 0.2;
  int bootstrap_episodes = 10;
  int bootstrap_sweeps = 2000;
  int updates_per_step = 1;
  double convergence_threshold = 1e-3;
  int convergence_window = 10;
  int checkpoint_every = 0;

  void validate() const;
};

struct Transition {
  Observation s;
  Vec2 u_l = Vec2::Zero();
  double r = 0.0;
  Observation s_next;
  bool done = false;
};

struct Batch {
  Matrix s;
  Matrix u_l;
  Vector r;
  Matrix s_next;
  Vector done;

  Eigen::Index size() const { return r.size(); }
};

/// FIFO ring of transitions with uniform sampling with replacement.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  void push(const Transition& t);
  Batch sample(std::size_t count, Rng& rng) const;
  Batch gather(const std::vector<std::size_t>& indices) const;
  Batch all() const;
  Transition at(std::size_t i) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t head() const { return head_; }
  void clear();

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  std::vector<double> s_;
  std::vector<double> s_next_;
  std::vector<double> u_;
  std::vector<double> r_;
  std::vector<unsigned char> done_;
};

struct UpdateStats {
  double q_loss = 0.0;
  double pi_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;
};

struct ActorStep {
  double loss = 0.0;
  Vector log_prob;
};

struct EpisodeRecord {
  int episode = 0;
  double ret = 0.0;
  double q_loss = 0.0;
  double pi_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;
  int steps = 0;
  bool diverged = false;
};

class Trainer {
 public:
  Trainer(const SacConfig& config, const Vec2& tau_max, std::uint64_t seed);

  const SacConfig& config() const { return config_; }
  const Vector& tau_max() const { return tau_max_; }

  Matrix normalize(const Matrix& s) const;
  Matrix critic_input(const Matrix& s, const Matrix& u_l) const;
  Vector q_values(const Mlp& critic, const Matrix& s, const Matrix& u_l) const;

  Vec2 act(const Observation& obs, bool stochastic);

  /// Soft Bellman targets. `noise` holds one standard-normal column per sample.
  Vector compute_target(const Batch& batch, const Matrix& noise) const;
  Vector compute_target(const Batch& batch);

  double critic_update(const Batch& batch, const Vector& target);
  ActorStep actor_update(const Batch& batch, const Matrix& noise);
  ActorStep actor_update(const Batch& batch);
  void temperature_update(const Vector& log_prob);
  void polyak_update();
  UpdateStats update(const Batch& batch);

  /// Loss and parameter gradients of the actor objective on a fixed noise draw.
  double actor_loss(const Batch& batch, const Matrix& noise, ParamList* grads,
                    Vector* log_prob = nullptr) const;
  /// Critic loss for critic 1 and its gradients.
  double critic_loss(const Mlp& critic, const Batch& batch, const Vector& target,
                     ParamList* grads) const;
  /// Temperature loss mean(-alpha (log_prob + target_entropy)) and its gradient in log alpha.
  double temperature_loss(const Vector& log_prob, double* grad) const;

  /// Fits the critics to the baseline-only policy on data collected with
  /// u_l = 0 and seeds the replay memory. Returns the Bellman residual
  /// before and after fitting.
  std::pair<double, double> bootstrap(Environment& env, ReplayMemory& replay, int episodes);
  double zero_action_residual(const Batch& data) const;

  using EpisodeCallback = std::function<void(const EpisodeRecord&, Trainer&)>;
  std::vector<EpisodeRecord> train(Environment& env, ReplayMemory& replay,
                                   const EpisodeCallback& on_episode = {});

  Mlp actor, q1, q2, q1_target, q2_target;
  double log_alpha = 0.0;
  AdamState actor_opt, q1_opt, q2_opt, alpha_opt;
  Rng rng;
  long updates = 0;
  long env_steps = 0;
  int episodes_done = 0;

 private:
  SacConfig config_;
  Vector tau_max_;
  Observation inv_scale_;
};

}  // namespace mrrl
