#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "pgnn/error.hpp"
#include "pgnn/mlp.hpp"

namespace pgnn {

namespace detail {

inline void require_matching(const Mlp& model, const Gradients& grads) {
  if (grads.weights.size() != model.layers.size() || grads.biases.size() != model.layers.size())
    throw ShapeError("gradients do not match model depth");
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    require_same_shape(grads.weights[l], model.weights[l], "gradient/weight");
    if (grads.biases[l].size() != model.biases[l].size())
      throw ShapeError("gradient/bias length mismatch");
  }
}

}  // namespace detail

// w <- w - lr * grad for every unmasked parameter.
inline void sgd_step(Mlp& model, const Gradients& grads, double learning_rate) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  detail::require_matching(model, grads);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto w = model.weights[l].values();
    auto g = grads.weights[l].values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= learning_rate * g[i];
    auto& b = model.biases[l];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= learning_rate * grads.biases[l][i];
  }
  model.apply_masks();
}

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double stability = 1e-8;
  std::uint64_t step = 0;
  std::vector<Matrix> m_weights, v_weights;
  std::vector<std::vector<double>> m_biases, v_biases;

  static AdamState for_model(const Mlp& model) {
    AdamState s;
    for (const auto& l : model.layers) {
      s.m_weights.emplace_back(l.output_dim, l.input_dim);
      s.v_weights.emplace_back(l.output_dim, l.input_dim);
      s.m_biases.emplace_back(l.output_dim, 0.0);
      s.v_biases.emplace_back(l.output_dim, 0.0);
    }
    return s;
  }

  bool matches(const Mlp& model) const {
    if (m_weights.size() != model.layers.size()) return false;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      if (m_weights[l].rows() != model.weights[l].rows() ||
          m_weights[l].cols() != model.weights[l].cols() ||
          m_biases[l].size() != model.biases[l].size())
        return false;
    }
    return true;
  }
};

namespace detail {

inline void adam_update(double& param, double& m, double& v, double g, double lr, double b1,
                        double b2, double c1, double c2, double stability) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g * g;
  const double m_hat = m / c1;
  const double v_hat = v / c2;
  param -= lr * m_hat / (std::sqrt(v_hat) + stability);
}

}  // namespace detail

// Bias-corrected Adam. Masked weights receive zero gradient, so their
// moments stay 0 and the weight stays 0.
inline void adam_step(Mlp& model, const Gradients& grads, AdamState& state, double learning_rate) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  detail::require_matching(model, grads);
  if (!state.matches(model)) throw ShapeError("adam state does not match model");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto w = model.weights[l].values();
    auto g = grads.weights[l].values();
    auto m = state.m_weights[l].values();
    auto v = state.v_weights[l].values();
    const double* mask = model.has_masks() ? model.masks[l].values().data() : nullptr;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (mask && mask[i] == 0.0) continue;
      detail::adam_update(w[i], m[i], v[i], g[i], learning_rate, state.beta1, state.beta2, c1, c2,
                          state.stability);
    }
    auto& b = model.biases[l];
    for (std::size_t i = 0; i < b.size(); ++i)
      detail::adam_update(b[i], state.m_biases[l][i], state.v_biases[l][i], grads.biases[l][i],
                          learning_rate, state.beta1, state.beta2, c1, c2, state.stability);
  }
  model.apply_masks();
}

}  // namespace pgnn
