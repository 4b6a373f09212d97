#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mrrl/environment.hpp"
#include "mrrl/random.hpp"

namespace mrrl {

/// Finite MDP with entropy-regularised soft values. Q tables and policies
/// are states x actions; transitions are stored per action as
/// states x states matrices with P[a](s, s') = P(s' | s, a).
struct TabularMdp {
  int states = 0;
  int actions = 0;
  std::vector<Eigen::MatrixXd> transitions;
  Eigen::MatrixXd reward;
  double gamma = 0.9;
  double alpha = 0.1;

  void validate() const;
  /// Bound on |R + gamma * alpha * H(pi)| used in the value bound R_bar / (1 - gamma).
  double reward_bound() const;
};

TabularMdp random_mdp(int states, int actions, double gamma, double alpha, Rng& rng);

Eigen::MatrixXd uniform_policy(const TabularMdp& mdp);

/// Reward with the successor policy's expected entropy folded in.
Eigen::MatrixXd entropy_augmented_reward(const TabularMdp& mdp, const Eigen::MatrixXd& policy);

/// One application of the soft Bellman operator for a fixed policy.
Eigen::MatrixXd soft_backup(const TabularMdp& mdp, const Eigen::MatrixXd& q, const Eigen::MatrixXd& policy);

/// Softmax of Q / alpha per state.
Eigen::MatrixXd policy_improvement(const TabularMdp& mdp, const Eigen::MatrixXd& q);

/// Fixed point of soft_backup by a dense linear solve.
Eigen::MatrixXd evaluate_policy(const TabularMdp& mdp, const Eigen::MatrixXd& policy);

struct IterativeEvaluation {
  Eigen::MatrixXd q;
  std::vector<double> step_norms;
  int iterations = 0;
};

IterativeEvaluation evaluate_policy_iteratively(const TabularMdp& mdp, const Eigen::MatrixXd& policy,
                                                double tol, int max_iterations);

struct PolicyIterationResult {
  std::vector<Eigen::MatrixXd> q_tables;
  Eigen::MatrixXd policy;
  int iterations = 0;
  bool converged = false;
  double worst_decrease = 0.0;
};

PolicyIterationResult soft_policy_iteration(const TabularMdp& mdp, double tol, int max_iterations);

/// Central-difference gradient.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double h);

/// Minimum distance between the vessel and the obstacle over t in [0, horizon]
/// under constant velocities, by grid search refined with a quadratic fit.
double brute_force_closest(const Vec2& p_a, const Vec2& v_a, const Obstacle& obstacle, double horizon,
                           double grid_step);

}  // namespace mrrl
