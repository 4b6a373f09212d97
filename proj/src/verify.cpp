#include "mrrl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mrrl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void TabularMdp::validate() const {
  if (states <= 0 || actions <= 0) throw std::invalid_argument("MDP needs states and actions");
  if (static_cast<int>(transitions.size()) != actions) throw std::invalid_argument("one transition matrix per action");
  for (const MatrixXd& p : transitions) {
    if (p.rows() != states || p.cols() != states) throw std::invalid_argument("transition matrix has the wrong shape");
    if (p.minCoeff() < 0.0) throw std::invalid_argument("negative transition probability");
    if ((p.rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-12)
      throw std::invalid_argument("transition rows must sum to one");
  }
  if (reward.rows() != states || reward.cols() != actions) throw std::invalid_argument("reward table has the wrong shape");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
}

double TabularMdp::reward_bound() const {
  return reward.cwiseAbs().maxCoeff() + gamma * alpha * std::log(static_cast<double>(actions));
}

TabularMdp random_mdp(int states, int actions, double gamma, double alpha, Rng& rng) {
  TabularMdp m;
  m.states = states;
  m.actions = actions;
  m.gamma = gamma;
  m.alpha = alpha;
  for (int a = 0; a < actions; ++a) {
    MatrixXd p(states, states);
    for (int i = 0; i < states; ++i) {
      for (int j = 0; j < states; ++j) p(i, j) = rng.uniform();
      p.row(i) /= p.row(i).sum();
    }
    m.transitions.push_back(p);
  }
  m.reward.resize(states, actions);
  for (int i = 0; i < states; ++i)
    for (int a = 0; a < actions; ++a) m.reward(i, a) = -rng.uniform();
  m.validate();
  return m;
}

MatrixXd uniform_policy(const TabularMdp& mdp) {
  return MatrixXd::Constant(mdp.states, mdp.actions, 1.0 / mdp.actions);
}

namespace {

VectorXd policy_entropy(const MatrixXd& policy) {
  VectorXd h = VectorXd::Zero(policy.rows());
  for (Eigen::Index s = 0; s < policy.rows(); ++s)
    for (Eigen::Index a = 0; a < policy.cols(); ++a) {
      const double p = policy(s, a);
      if (p > 0.0) h(s) -= p * std::log(p);
    }
  return h;
}

void check_policy(const TabularMdp& mdp, const MatrixXd& policy) {
  if (policy.rows() != mdp.states || policy.cols() != mdp.actions)
    throw std::invalid_argument("policy table has the wrong shape");
}

}  // namespace

MatrixXd entropy_augmented_reward(const TabularMdp& mdp, const MatrixXd& policy) {
  check_policy(mdp, policy);
  const VectorXd h = policy_entropy(policy);
  MatrixXd r = mdp.reward;
  for (int a = 0; a < mdp.actions; ++a) r.col(a) += mdp.gamma * mdp.alpha * (mdp.transitions[a] * h);
  return r;
}

MatrixXd soft_backup(const TabularMdp& mdp, const MatrixXd& q, const MatrixXd& policy) {
  check_policy(mdp, policy);
  if (q.rows() != mdp.states || q.cols() != mdp.actions) throw std::invalid_argument("Q table has the wrong shape");
  const VectorXd v = q.cwiseProduct(policy).rowwise().sum();
  MatrixXd out = entropy_augmented_reward(mdp, policy);
  for (int a = 0; a < mdp.actions; ++a) out.col(a) += mdp.gamma * (mdp.transitions[a] * v);
  return out;
}

MatrixXd policy_improvement(const TabularMdp& mdp, const MatrixXd& q) {
  if (!(mdp.alpha > 0.0)) throw std::invalid_argument("policy improvement needs alpha > 0");
  MatrixXd p(q.rows(), q.cols());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    const double mx = q.row(s).maxCoeff();
    for (Eigen::Index a = 0; a < q.cols(); ++a) p(s, a) = std::exp((q(s, a) - mx) / mdp.alpha);
    p.row(s) /= p.row(s).sum();
  }
  return p;
}

MatrixXd evaluate_policy(const TabularMdp& mdp, const MatrixXd& policy) {
  check_policy(mdp, policy);
  const int n = mdp.states * mdp.actions;
  auto idx = [&](int s, int a) { return s * mdp.actions + a; };
  MatrixXd lhs = MatrixXd::Identity(n, n);
  const MatrixXd r = entropy_augmented_reward(mdp, policy);
  VectorXd rhs(n);
  for (int s = 0; s < mdp.states; ++s)
    for (int a = 0; a < mdp.actions; ++a) {
      rhs(idx(s, a)) = r(s, a);
      for (int s2 = 0; s2 < mdp.states; ++s2)
        for (int a2 = 0; a2 < mdp.actions; ++a2)
          lhs(idx(s, a), idx(s2, a2)) -= mdp.gamma * mdp.transitions[a](s, s2) * policy(s2, a2);
    }
  const VectorXd x = lhs.partialPivLu().solve(rhs);
  MatrixXd q(mdp.states, mdp.actions);
  for (int s = 0; s < mdp.states; ++s)
    for (int a = 0; a < mdp.actions; ++a) q(s, a) = x(idx(s, a));
  return q;
}

IterativeEvaluation evaluate_policy_iteratively(const TabularMdp& mdp, const MatrixXd& policy, double tol,
                                                int max_iterations) {
  IterativeEvaluation out;
  out.q = MatrixXd::Zero(mdp.states, mdp.actions);
  for (int i = 0; i < max_iterations; ++i) {
    MatrixXd next = soft_backup(mdp, out.q, policy);
    const double d = (next - out.q).cwiseAbs().maxCoeff();
    out.q = std::move(next);
    out.step_norms.push_back(d);
    out.iterations = i + 1;
    if (d < tol) break;
  }
  return out;
}

PolicyIterationResult soft_policy_iteration(const TabularMdp& mdp, double tol, int max_iterations) {
  PolicyIterationResult out;
  out.policy = uniform_policy(mdp);
  out.q_tables.push_back(evaluate_policy(mdp, out.policy));
  for (int i = 0; i < max_iterations; ++i) {
    MatrixXd next_policy = policy_improvement(mdp, out.q_tables.back());
    MatrixXd q = evaluate_policy(mdp, next_policy);
    out.worst_decrease = std::min(out.worst_decrease, (q - out.q_tables.back()).minCoeff());
    const double change = (next_policy - out.policy).cwiseAbs().maxCoeff();
    out.policy = std::move(next_policy);
    out.q_tables.push_back(std::move(q));
    out.iterations = i + 1;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  VectorXd g(x.size());
  VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    xp(i) = xi + h;
    const double fp = f(xp);
    xp(i) = xi - h;
    const double fm = f(xp);
    xp(i) = xi;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

double brute_force_closest(const Vec2& p_a, const Vec2& v_a, const Obstacle& obstacle, double horizon,
                           double grid_step) {
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be non-negative");
  const Vec2 dp = obstacle.position - p_a;
  const Vec2 dv = obstacle.velocity - v_a;
  auto dist2 = [&](double t) { return (dp + dv * t).squaredNorm(); };

  const long n = static_cast<long>(std::ceil(horizon / grid_step));
  long best = 0;
  double best_d2 = dist2(0.0);
  for (long k = 1; k <= n; ++k) {
    const double d2 = dist2(std::min(k * grid_step, horizon));
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }
  if (n >= 2) {
    // Three grid points around the best sample; the fit is exact for d^2.
    const long i0 = std::clamp(best - 1, 0L, n - 2);
    const double t0 = i0 * grid_step, t1 = (i0 + 1) * grid_step, t2 = std::min((i0 + 2) * grid_step, horizon);
    const double f0 = dist2(t0), f1 = dist2(t1), f2 = dist2(t2);
    const double d01 = (f1 - f0) / (t1 - t0), d12 = (f2 - f1) / (t2 - t1);
    const double curv = (d12 - d01) / (t2 - t0);
    if (curv > 0.0) {
      const double t = std::clamp(0.5 * (t0 + t1) - d01 / (2.0 * curv), 0.0, horizon);
      best_d2 = std::min(best_d2, dist2(t));
    }
  }
  return std::sqrt(std::max(best_d2, 0.0));
}

}  // namespace mrrl
