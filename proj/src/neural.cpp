#include "mrrl/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mrrl {

Mlp::Mlp(const std::vector<int>& dims, Rng& rng) {
  if (dims.size() < 2) throw std::invalid_argument("an MLP needs at least input and output sizes");
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const int in = dims[k], out = dims[k + 1];
    if (in <= 0 || out <= 0) throw std::invalid_argument("layer sizes must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix w(out, in + 1);
    for (int j = 0; j < w.cols(); ++j)
      for (int i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
    weights_.push_back(std::move(w));
  }
}

Mlp::Mlp(ParamList weights) : weights_(std::move(weights)) { check(); }

void Mlp::check() const {
  if (weights_.empty()) throw std::invalid_argument("an MLP needs at least one layer");
  for (std::size_t k = 1; k < weights_.size(); ++k) {
    if (weights_[k].cols() != weights_[k - 1].rows() + 1)
      throw std::invalid_argument("layer " + std::to_string(k) + " does not match the previous layer");
  }
}

int Mlp::input_dim() const { return static_cast<int>(weights_.front().cols()) - 1; }
int Mlp::output_dim() const { return static_cast<int>(weights_.back().rows()); }

std::vector<int> Mlp::dims() const {
  std::vector<int> d{input_dim()};
  for (const Matrix& w : weights_) d.push_back(static_cast<int>(w.rows()));
  return d;
}

Matrix Mlp::forward(const Matrix& x, Cache* cache) const {
  if (x.rows() != input_dim())
    throw std::invalid_argument("input has " + std::to_string(x.rows()) + " rows, expected " +
                                std::to_string(input_dim()));
  if (cache) cache->inputs.clear();
  Matrix h = x;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    const Matrix& w = weights_[k];
    const Eigen::Index in = w.cols() - 1;
    Matrix z = w.leftCols(in) * h;
    z.colwise() += w.col(in);
    if (cache) cache->inputs.push_back(std::move(h));
    if (k + 1 < weights_.size()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

ParamList Mlp::backward(const Cache& cache, const Matrix& dy, Matrix* dx) const {
  if (cache.inputs.size() != weights_.size()) throw std::invalid_argument("cache does not match network");
  if (dy.rows() != output_dim() || dy.cols() != cache.inputs.front().cols())
    throw std::invalid_argument("upstream gradient has the wrong shape");
  ParamList grads(weights_.size());
  Matrix delta = dy;
  for (std::size_t k = weights_.size(); k-- > 0;) {
    const Matrix& w = weights_[k];
    const Matrix& h = cache.inputs[k];
    const Eigen::Index in = w.cols() - 1;
    grads[k].resize(w.rows(), w.cols());
    grads[k].leftCols(in).noalias() = delta * h.transpose();
    grads[k].col(in) = delta.rowwise().sum();
    if (k == 0 && !dx) break;
    Matrix dh = w.leftCols(in).transpose() * delta;
    if (k > 0) {
      delta = dh.cwiseProduct((h.array() > 0.0).cast<double>().matrix());
    } else {
      *dx = std::move(dh);
    }
  }
  return grads;
}

Matrix Mlp::input_gradient(const Cache& cache, const Matrix& dy) const {
  Matrix delta = dy;
  for (std::size_t k = weights_.size(); k-- > 0;) {
    const Matrix& w = weights_[k];
    const Eigen::Index in = w.cols() - 1;
    Matrix dh = w.leftCols(in).transpose() * delta;
    if (k == 0) return dh;
    delta = dh.cwiseProduct((cache.inputs[k].array() > 0.0).cast<double>().matrix());
  }
  return delta;
}

AdamState::AdamState(const ParamList& like, double learning_rate) : lr(learning_rate) {
  for (const Matrix& p : like) {
    m.push_back(Matrix::Zero(p.rows(), p.cols()));
    v.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void adam_step(ParamList& params, const ParamList& grads, AdamState& s) {
  if (params.size() != grads.size() || params.size() != s.m.size())
    throw std::invalid_argument("adam_step: parameter lists differ in length");
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols())
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grads[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grads[i].cwiseProduct(grads[i]);
    params[i].array() -= s.lr * (s.m[i].array() / c1) / ((s.v[i].array() / c2).sqrt() + s.eps);
  }
}

PolicySample sample_action(const Vector& head, const Vector& noise, const Vector& tau_max) {
  const Eigen::Index n = tau_max.size();
  if (head.size() != 2 * n || noise.size() != n)
    throw std::invalid_argument("sample_action: size mismatch");
  constexpr double half_log_2pi = 0.91893853320467274178;
  PolicySample out;
  out.pre_action.resize(n);
  out.action.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double log_std = std::clamp(head(n + i), kLogStdMin, kLogStdMax);
    const double a = head(i) + std::exp(log_std) * noise(i);
    const double t = std::tanh(a);
    out.pre_action(i) = a;
    out.action(i) = tau_max(i) * t;
    out.log_prob += -0.5 * noise(i) * noise(i) - log_std - half_log_2pi -
                    std::log(tau_max(i) * (1.0 - t * t) + kSquashEps);
  }
  return out;
}

Vector deterministic_action(const Vector& head, const Vector& tau_max) {
  const Eigen::Index n = tau_max.size();
  if (head.size() != 2 * n) throw std::invalid_argument("deterministic_action: size mismatch");
  return tau_max.cwiseProduct(head.head(n).array().tanh().matrix());
}

}  // namespace mrrl
