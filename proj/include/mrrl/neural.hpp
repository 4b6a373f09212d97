#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mrrl/random.hpp"

namespace mrrl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ParamList = std::vector<Matrix>;

/// Fully connected ReLU network. Layer k holds an out x (in + 1) matrix
/// whose last column is the bias. Batches are stored column-wise.
class Mlp {
 public:
  struct Cache {
    std::vector<Matrix> inputs;
  };

  Mlp() = default;
  Mlp(const std::vector<int>& dims, Rng& rng);
  explicit Mlp(ParamList weights);

  int input_dim() const;
  int output_dim() const;
  std::vector<int> dims() const;
  std::size_t layer_count() const { return weights_.size(); }

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;

  /// Reverse pass for upstream gradient dy. Returns parameter gradients
  /// and writes the input gradient into dx when it is non-null.
  ParamList backward(const Cache& cache, const Matrix& dy, Matrix* dx = nullptr) const;

  /// Input gradient only; skips the parameter gradients.
  Matrix input_gradient(const Cache& cache, const Matrix& dy) const;

  ParamList& weights() { return weights_; }
  const ParamList& weights() const { return weights_; }

 private:
  void check() const;

  ParamList weights_;
};

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  ParamList m;
  ParamList v;

  AdamState() = default;
  AdamState(const ParamList& like, double learning_rate);
};

void adam_step(ParamList& params, const ParamList& grads, AdamState& state);

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;
constexpr double kSquashEps = 1e-6;

struct PolicySample {
  Vector action;
  Vector pre_action;
  double log_prob = 0.0;
};

/// Squashed Gaussian policy head. `head` stacks the means then the raw
/// log standard deviations; `noise` is a standard normal draw.
PolicySample sample_action(const Vector& head, const Vector& noise, const Vector& tau_max);

/// Mean action tau_max * tanh(mean) used for deterministic evaluation.
Vector deterministic_action(const Vector& head, const Vector& tau_max);

}  // namespace mrrl
