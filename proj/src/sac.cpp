#include "mrrl/sac.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mrrl {

namespace {

constexpr int W = kObservationWidth;
constexpr int A = kActionDim;

Matrix standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

struct SquashedBatch {
  Matrix u;
  Matrix t;
  Matrix std;
  Matrix clamped;
  Vector log_prob;
};

SquashedBatch squash(const Matrix& head, const Matrix& noise, const Vector& tau_max) {
  constexpr double half_log_2pi = 0.91893853320467274178;
  const Eigen::Index n = head.cols();
  SquashedBatch out;
  out.u.resize(A, n);
  out.t.resize(A, n);
  out.std.resize(A, n);
  out.clamped.resize(A, n);
  out.log_prob = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int i = 0; i < A; ++i) {
      const double raw = head(A + i, j);
      const double log_std = std::clamp(raw, kLogStdMin, kLogStdMax);
      const double sd = std::exp(log_std);
      const double e = noise(i, j);
      const double t = std::tanh(head(i, j) + sd * e);
      out.t(i, j) = t;
      out.u(i, j) = tau_max(i) * t;
      out.std(i, j) = sd;
      out.clamped(i, j) = (raw < kLogStdMin || raw > kLogStdMax) ? 1.0 : 0.0;
      out.log_prob(j) += -0.5 * e * e - log_std - half_log_2pi -
                         std::log(tau_max(i) * (1.0 - t * t) + kSquashEps);
    }
  }
  return out;
}

void polyak(ParamList& target, const ParamList& source, double kappa) {
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = kappa * source[i] + (1.0 - kappa) * target[i];
}

}  // namespace

void SacConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (!(polyak > 0.0 && polyak <= 1.0)) throw std::invalid_argument("polyak rate must lie in (0, 1]");
  if (batch_size <= 0) throw std::invalid_argument("batch size must be positive");
  if (static_cast<std::size_t>(batch_size) > replay_capacity)
    throw std::invalid_argument("batch size exceeds replay capacity");
  if (!(lr_q > 0.0 && lr_pi > 0.0 && lr_alpha > 0.0))
    throw std::invalid_argument("learning rates must be positive");
  if (!(initial_alpha > 0.0)) throw std::invalid_argument("initial alpha must be positive");
  if (episodes < 0 || steps_per_episode <= 0) throw std::invalid_argument("invalid episode budget");
  if (bootstrap_episodes < 0 || bootstrap_sweeps < 0) throw std::invalid_argument("invalid bootstrap size");
  if (updates_per_step < 0) throw std::invalid_argument("updates per step must be non-negative");
  if (convergence_window <= 0) throw std::invalid_argument("convergence window must be positive");
  for (int h : hidden)
    if (h <= 0) throw std::invalid_argument("hidden layer sizes must be positive");
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayMemory::clear() {
  size_ = 0;
  head_ = 0;
  s_.clear();
  s_next_.clear();
  u_.clear();
  r_.clear();
  done_.clear();
}

void ReplayMemory::push(const Transition& t) {
  if (size_ < capacity_) {
    s_.insert(s_.end(), t.s.data(), t.s.data() + W);
    s_next_.insert(s_next_.end(), t.s_next.data(), t.s_next.data() + W);
    u_.insert(u_.end(), t.u_l.data(), t.u_l.data() + A);
    r_.push_back(t.r);
    done_.push_back(t.done ? 1 : 0);
    ++size_;
  } else {
    std::copy(t.s.data(), t.s.data() + W, s_.begin() + static_cast<std::ptrdiff_t>(head_ * W));
    std::copy(t.s_next.data(), t.s_next.data() + W, s_next_.begin() + static_cast<std::ptrdiff_t>(head_ * W));
    std::copy(t.u_l.data(), t.u_l.data() + A, u_.begin() + static_cast<std::ptrdiff_t>(head_ * A));
    r_[head_] = t.r;
    done_[head_] = t.done ? 1 : 0;
  }
  head_ = (head_ + 1) % capacity_;
}

Transition ReplayMemory::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay index out of range");
  Transition t;
  t.s = Eigen::Map<const Observation>(s_.data() + i * W);
  t.s_next = Eigen::Map<const Observation>(s_next_.data() + i * W);
  t.u_l = Eigen::Map<const Vec2>(u_.data() + i * A);
  t.r = r_[i];
  t.done = done_[i] != 0;
  return t;
}

Batch ReplayMemory::gather(const std::vector<std::size_t>& idx) const {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Batch b;
  b.s.resize(W, n);
  b.s_next.resize(W, n);
  b.u_l.resize(A, n);
  b.r.resize(n);
  b.done.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t i = idx[static_cast<std::size_t>(j)];
    if (i >= size_) throw std::out_of_range("replay index out of range");
    b.s.col(j) = Eigen::Map<const Observation>(s_.data() + i * W);
    b.s_next.col(j) = Eigen::Map<const Observation>(s_next_.data() + i * W);
    b.u_l.col(j) = Eigen::Map<const Vec2>(u_.data() + i * A);
    b.r(j) = r_[i];
    b.done(j) = done_[i];
  }
  return b;
}

Batch ReplayMemory::sample(std::size_t count, Rng& rng) const {
  if (size_ == 0) throw std::runtime_error("cannot sample from an empty replay memory");
  std::vector<std::size_t> idx(count);
  for (std::size_t& i : idx) i = static_cast<std::size_t>(rng.index(size_));
  return gather(idx);
}

Batch ReplayMemory::all() const {
  std::vector<std::size_t> idx(size_);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return gather(idx);
}

Trainer::Trainer(const SacConfig& config, const Vec2& tau_max, std::uint64_t seed)
    : rng(seed), config_(config), tau_max_(tau_max) {
  config_.validate();
  if (!(tau_max.minCoeff() > 0.0)) throw std::invalid_argument("tau_max must be positive");
  inv_scale_ = observation_scale().cwiseInverse();

  std::vector<int> actor_dims{W};
  std::vector<int> critic_dims{W + A};
  for (int h : config_.hidden) {
    actor_dims.push_back(h);
    critic_dims.push_back(h);
  }
  actor_dims.push_back(2 * A);
  critic_dims.push_back(1);
  actor = Mlp(actor_dims, rng);
  q1 = Mlp(critic_dims, rng);
  q2 = Mlp(critic_dims, rng);
  q1_target = q1;
  q2_target = q2;
  log_alpha = std::log(config_.initial_alpha);
  actor_opt = AdamState(actor.weights(), config_.lr_pi);
  q1_opt = AdamState(q1.weights(), config_.lr_q);
  q2_opt = AdamState(q2.weights(), config_.lr_q);
  alpha_opt = AdamState(ParamList{Matrix::Zero(1, 1)}, config_.lr_alpha);
}

Matrix Trainer::normalize(const Matrix& s) const { return inv_scale_.asDiagonal() * s; }

Matrix Trainer::critic_input(const Matrix& s, const Matrix& u_l) const {
  Matrix x(W + A, s.cols());
  x.topRows(W) = normalize(s);
  x.bottomRows(A) = tau_max_.cwiseInverse().asDiagonal() * u_l;
  return x;
}

Vector Trainer::q_values(const Mlp& critic, const Matrix& s, const Matrix& u_l) const {
  return critic.forward(critic_input(s, u_l)).row(0).transpose();
}

Vec2 Trainer::act(const Observation& obs, bool stochastic) {
  const Vector head = actor.forward(normalize(obs)).col(0);
  if (!stochastic) return deterministic_action(head, tau_max_);
  Vector noise(A);
  for (int i = 0; i < A; ++i) noise(i) = rng.normal();
  return sample_action(head, noise, tau_max_).action;
}

Vector Trainer::compute_target(const Batch& b, const Matrix& noise) const {
  const Matrix head = actor.forward(normalize(b.s_next));
  const SquashedBatch sq = squash(head, noise, tau_max_);
  const Vector qa = q_values(q1_target, b.s_next, sq.u);
  const Vector qb = q_values(q2_target, b.s_next, sq.u);
  const double alpha = std::exp(log_alpha);
  const Vector soft = qa.cwiseMin(qb) - alpha * sq.log_prob;
  return b.r + config_.gamma * (Vector::Ones(b.size()) - b.done).cwiseProduct(soft);
}

Vector Trainer::compute_target(const Batch& b) {
  const Matrix noise = standard_normal(rng, A, b.size());
  return compute_target(b, noise);
}

double Trainer::critic_loss(const Mlp& critic, const Batch& b, const Vector& target,
                            ParamList* grads) const {
  Mlp::Cache cache;
  const Matrix q = critic.forward(critic_input(b.s, b.u_l), &cache);
  const Vector diff = q.row(0).transpose() - target;
  const double n = static_cast<double>(b.size());
  if (grads) *grads = critic.backward(cache, (diff / n).transpose());
  return 0.5 * diff.squaredNorm() / n;
}

double Trainer::critic_update(const Batch& b, const Vector& target) {
  ParamList g1, g2;
  const double l1 = critic_loss(q1, b, target, &g1);
  const double l2 = critic_loss(q2, b, target, &g2);
  adam_step(q1.weights(), g1, q1_opt);
  adam_step(q2.weights(), g2, q2_opt);
  return 0.5 * (l1 + l2);
}

double Trainer::actor_loss(const Batch& b, const Matrix& noise, ParamList* grads,
                           Vector* log_prob) const {
  const Eigen::Index n = b.size();
  const double alpha = std::exp(log_alpha);
  Mlp::Cache actor_cache;
  const Matrix head = actor.forward(normalize(b.s), &actor_cache);
  const SquashedBatch sq = squash(head, noise, tau_max_);

  const Matrix x = critic_input(b.s, sq.u);
  Mlp::Cache c1, c2;
  const Vector qa = q1.forward(x, &c1).row(0).transpose();
  const Vector qb = q2.forward(x, &c2).row(0).transpose();
  const Vector qmin = qa.cwiseMin(qb);
  const double loss = (alpha * sq.log_prob - qmin).mean();
  if (log_prob) *log_prob = sq.log_prob;
  if (!grads) return loss;

  const Matrix ones = Matrix::Ones(1, n);
  const Matrix ga = q1.input_gradient(c1, ones);
  const Matrix gb = q2.input_gradient(c2, ones);
  Matrix dhead(2 * A, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Matrix& g = qa(j) <= qb(j) ? ga : gb;
    for (int i = 0; i < A; ++i) {
      const double tau = tau_max_(i);
      const double t = sq.t(i, j);
      const double s = 1.0 - t * t;
      const double dq_du = g(W + i, j) / tau;
      const double dl_da = alpha * 2.0 * tau * t * s / (tau * s + kSquashEps) - dq_du * tau * s;
      dhead(i, j) = dl_da / static_cast<double>(n);
      const double dl_dlogstd = sq.clamped(i, j) > 0.0 ? 0.0 : -alpha + dl_da * sq.std(i, j) * noise(i, j);
      dhead(A + i, j) = dl_dlogstd / static_cast<double>(n);
    }
  }
  *grads = actor.backward(actor_cache, dhead);
  return loss;
}

ActorStep Trainer::actor_update(const Batch& b, const Matrix& noise) {
  ActorStep out;
  ParamList grads;
  out.loss = actor_loss(b, noise, &grads, &out.log_prob);
  adam_step(actor.weights(), grads, actor_opt);
  return out;
}

ActorStep Trainer::actor_update(const Batch& b) {
  const Matrix noise = standard_normal(rng, A, b.size());
  return actor_update(b, noise);
}

double Trainer::temperature_loss(const Vector& log_prob, double* grad) const {
  const double alpha = std::exp(log_alpha);
  const double m = (log_prob.array() + config_.target_entropy).mean();
  if (grad) *grad = -alpha * m;
  return -alpha * m;
}

void Trainer::temperature_update(const Vector& log_prob) {
  double g = 0.0;
  temperature_loss(log_prob, &g);
  ParamList p{Matrix::Constant(1, 1, log_alpha)};
  adam_step(p, ParamList{Matrix::Constant(1, 1, g)}, alpha_opt);
  log_alpha = p[0](0, 0);
}

void Trainer::polyak_update() {
  polyak(q1_target.weights(), q1.weights(), config_.polyak);
  polyak(q2_target.weights(), q2.weights(), config_.polyak);
}

UpdateStats Trainer::update(const Batch& b) {
  UpdateStats st;
  const Vector y = compute_target(b);
  st.q_loss = critic_update(b, y);
  const ActorStep as = actor_update(b);
  st.pi_loss = as.loss;
  st.entropy = -as.log_prob.mean();
  temperature_update(as.log_prob);
  polyak_update();
  st.alpha = std::exp(log_alpha);
  ++updates;
  return st;
}

double Trainer::zero_action_residual(const Batch& d) const {
  const Matrix zero = Matrix::Zero(A, d.size());
  const Vector next = q_values(q1, d.s_next, zero).cwiseMin(q_values(q2, d.s_next, zero));
  const Vector y = d.r + config_.gamma * (Vector::Ones(d.size()) - d.done).cwiseProduct(next);
  const Vector q = q_values(q1, d.s, zero);
  return 0.5 * (q - y).squaredNorm() / static_cast<double>(d.size());
}

std::pair<double, double> Trainer::bootstrap(Environment& env, ReplayMemory& replay, int episodes) {
  if (episodes <= 0) return {0.0, 0.0};
  ReplayMemory d0(static_cast<std::size_t>(episodes) * static_cast<std::size_t>(config_.steps_per_episode));
  for (int e = 0; e < episodes; ++e) {
    Observation obs = env.reset(rng);
    for (int k = 0; k < config_.steps_per_episode; ++k) {
      const StepResult res = env.step(Vec2::Zero());
      Transition t{obs, Vec2::Zero(), res.reward, res.obs, res.diverged};
      d0.push(t);
      replay.push(t);
      ++env_steps;
      obs = res.obs;
      if (res.done) break;
    }
  }
  const Batch data = d0.all();
  const double before = zero_action_residual(data);
  for (int sweep = 0; sweep < config_.bootstrap_sweeps; ++sweep) {
    const Batch b = d0.sample(static_cast<std::size_t>(config_.batch_size), rng);
    const Matrix zero = Matrix::Zero(A, b.size());
    const Vector next =
        q_values(q1_target, b.s_next, zero).cwiseMin(q_values(q2_target, b.s_next, zero));
    const Vector y = b.r + config_.gamma * (Vector::Ones(b.size()) - b.done).cwiseProduct(next);
    critic_update(b, y);
    polyak_update();
  }
  q1_target = q1;
  q2_target = q2;
  return {before, zero_action_residual(data)};
}

std::vector<EpisodeRecord> Trainer::train(Environment& env, ReplayMemory& replay,
                                          const EpisodeCallback& on_episode) {
  std::vector<EpisodeRecord> log;
  std::vector<double> recent_q;
  while (episodes_done < config_.episodes) {
    EpisodeRecord rec;
    rec.episode = episodes_done;
    Observation obs = env.reset(rng);
    int n_updates = 0;
    for (int k = 0; k < config_.steps_per_episode; ++k) {
      const Vec2 u = act(obs, true);
      const StepResult res = env.step(u);
      replay.push({obs, u, res.reward, res.obs, res.diverged});
      ++env_steps;
      ++rec.steps;
      rec.ret += res.reward;
      obs = res.obs;
      if (replay.size() >= static_cast<std::size_t>(config_.batch_size)) {
        for (int g = 0; g < config_.updates_per_step; ++g) {
          const UpdateStats st = update(replay.sample(static_cast<std::size_t>(config_.batch_size), rng));
          rec.q_loss += st.q_loss;
          rec.pi_loss += st.pi_loss;
          rec.entropy += st.entropy;
          ++n_updates;
        }
      }
      if (res.diverged) rec.diverged = true;
      if (res.done) break;
    }
    if (n_updates > 0) {
      rec.q_loss /= n_updates;
      rec.pi_loss /= n_updates;
      rec.entropy /= n_updates;
    }
    rec.alpha = std::exp(log_alpha);
    ++episodes_done;
    log.push_back(rec);
    if (on_episode) on_episode(rec, *this);

    if (n_updates > 0) recent_q.push_back(rec.q_loss);
    if (config_.convergence_threshold > 0.0 &&
        static_cast<int>(recent_q.size()) >= config_.convergence_window) {
      const double mean = std::accumulate(recent_q.end() - config_.convergence_window, recent_q.end(), 0.0) /
                          config_.convergence_window;
      if (mean < config_.convergence_threshold) break;
    }
  }
  return log;
}

}  // namespace mrrl
