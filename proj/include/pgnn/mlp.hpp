#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pgnn/error.hpp"
#include "pgnn/matrix.hpp"

namespace pgnn {

enum class Activation { ReLU, Identity };

inline const char* to_string(Activation a) { return a == Activation::ReLU ? "relu" : "identity"; }

struct LayerSpec {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  Activation activation = Activation::ReLU;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Dense feed-forward network. Layer l maps a batch (N x in) to (N x out) as
// Z = X W^T + b, H = f(Z), with W stored out x in.
//
// `masks` is either empty (dense model) or holds one 0/1 matrix per layer
// shaped like the weights. Masked weights are kept at exactly 0.
struct Mlp {
  std::vector<LayerSpec> layers;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  std::vector<Matrix> masks;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().input_dim; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().output_dim; }
  std::size_t hidden_layer_count() const { return layers.empty() ? 0 : layers.size() - 1; }
  bool has_masks() const { return !masks.empty(); }

  // Layer widths including the input, e.g. {10, 30, 30, 30, 7}.
  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d;
    if (layers.empty()) return d;
    d.push_back(layers.front().input_dim);
    for (const auto& l : layers) d.push_back(l.output_dim);
    return d;
  }

  std::size_t hidden_neuron_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) n += layers[l].output_dim;
    return n;
  }

  // Weights plus biases held in storage, masked or not.
  std::size_t stored_parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.output_dim * l.input_dim + l.output_dim;
    return n;
  }

  std::size_t weight_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.output_dim * l.input_dim;
    return n;
  }

  std::size_t masked_weight_count() const {
    std::size_t n = 0;
    for (const auto& m : masks)
      for (double v : m.values()) n += v == 0.0 ? 1 : 0;
    return n;
  }

  // Nonzero-capable parameters: stored parameters minus masked weights.
  std::size_t effective_parameter_count() const {
    return stored_parameter_count() - masked_weight_count();
  }

  bool is_masked(std::size_t layer, std::size_t out, std::size_t in) const {
    return has_masks() && masks[layer](out, in) == 0.0;
  }

  // Allocates an all-ones mask set if the model is still dense.
  void ensure_masks() {
    if (has_masks()) return;
    masks.reserve(layers.size());
    for (const auto& l : layers) masks.emplace_back(l.output_dim, l.input_dim, 1.0);
  }

  void apply_masks() {
    if (!has_masks()) return;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto w = weights[l].values();
      auto m = masks[l].values();
      for (std::size_t i = 0; i < w.size(); ++i)
        if (m[i] == 0.0) w[i] = 0.0;
    }
  }

  void validate() const {
    if (layers.empty()) throw ShapeError("model has no layers");
    if (weights.size() != layers.size() || biases.size() != layers.size())
      throw ShapeError("model parameter lists do not match layer count");
    if (has_masks() && masks.size() != layers.size())
      throw ShapeError("mask list does not match layer count");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& spec = layers[l];
      if (spec.input_dim == 0 || spec.output_dim == 0)
        throw ShapeError("layer " + std::to_string(l) + " has a zero dimension");
      if (l > 0 && layers[l - 1].output_dim != spec.input_dim)
        throw ShapeError("layer " + std::to_string(l) + " input does not chain");
      if (weights[l].rows() != spec.output_dim || weights[l].cols() != spec.input_dim)
        throw ShapeError("layer " + std::to_string(l) + " weight shape mismatch");
      if (biases[l].size() != spec.output_dim)
        throw ShapeError("layer " + std::to_string(l) + " bias length mismatch");
      if (has_masks() && (masks[l].rows() != spec.output_dim || masks[l].cols() != spec.input_dim))
        throw ShapeError("layer " + std::to_string(l) + " mask shape mismatch");
    }
  }

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

// Hidden layers get ReLU, the output layer Identity. Weights are drawn
// uniformly from [-sqrt(6/fan_in), sqrt(6/fan_in)], biases start at 0.
inline Mlp make_mlp(std::span<const std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ShapeError("an MLP needs at least input and output widths");
  for (auto d : dims)
    if (d == 0) throw ShapeError("layer widths must be >= 1");
  Mlp m;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    bool last = l + 2 == dims.size();
    m.layers.push_back({dims[l], dims[l + 1], last ? Activation::Identity : Activation::ReLU});
    double limit = std::sqrt(6.0 / static_cast<double>(dims[l]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(dims[l + 1], dims[l]);
    for (double& v : w.values()) v = dist(rng);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(dims[l + 1], 0.0);
  }
  return m;
}

inline Mlp make_mlp(std::initializer_list<std::size_t> dims, std::uint64_t seed) {
  return make_mlp(std::span<const std::size_t>(dims.begin(), dims.size()), seed);
}

struct ForwardTrace {
  Matrix input;
  std::vector<Matrix> pre;   // Z per layer
  std::vector<Matrix> post;  // H per layer; post.back() is the network output

  const Matrix& output() const { return post.back(); }
};

namespace detail {

// out = x W^T + b, x: N x in, W: out x in.
inline Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
  const std::size_t n = x.rows(), in = x.cols(), out = w.rows();
  Matrix z(n, out);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    auto zi = z.row(i);
    for (std::size_t o = 0; o < out; ++o) {
      auto wo = w.row(o);
      double acc = b[o];
      for (std::size_t k = 0; k < in; ++k) acc += xi[k] * wo[k];
      zi[o] = acc;
    }
  }
  return z;
}

}  // namespace detail

inline ForwardTrace forward(const Mlp& model, const Matrix& batch) {
  if (model.layers.empty()) throw ShapeError("forward: model has no layers");
  if (batch.cols() != model.input_dim())
    throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                     " columns, model expects " + std::to_string(model.input_dim()));
  ForwardTrace t;
  t.input = batch;
  t.pre.reserve(model.layers.size());
  t.post.reserve(model.layers.size());
  const Matrix* x = &t.input;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    Matrix z = detail::affine(*x, model.weights[l], model.biases[l]);
    Matrix h = z;
    if (model.layers[l].activation == Activation::ReLU)
      for (double& v : h.values()) v = v > 0.0 ? v : 0.0;
    t.pre.push_back(std::move(z));
    t.post.push_back(std::move(h));
    x = &t.post.back();
  }
  return t;
}

inline Matrix predict(const Mlp& model, const Matrix& batch) {
  return forward(model, batch).post.back();
}

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  // dL/dH for every hidden layer (N x width), indexed like the hidden layers.
  std::vector<Matrix> hidden_outputs;
};

// Reverse-mode pass given dL/dY for the network output.
inline Gradients backward(const Mlp& model, const ForwardTrace& trace,
                          const Matrix& loss_grad_wrt_outputs) {
  const std::size_t depth = model.layers.size();
  if (trace.post.size() != depth) throw ShapeError("backward: trace does not match model");
  require_same_shape(loss_grad_wrt_outputs, trace.output(), "backward");
  const std::size_t n = trace.input.rows();

  Gradients g;
  g.weights.resize(depth);
  g.biases.resize(depth);
  g.hidden_outputs.resize(depth - 1);

  Matrix delta = loss_grad_wrt_outputs;  // dL/dZ of the current layer
  if (model.layers.back().activation == Activation::ReLU) {
    const Matrix& z = trace.pre.back();
    auto d = delta.values();
    auto zv = z.values();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (!(zv[i] > 0.0)) d[i] = 0.0;
  }

  for (std::size_t l = depth; l-- > 0;) {
    const Matrix& x = l == 0 ? trace.input : trace.post[l - 1];
    const std::size_t out = model.layers[l].output_dim, in = model.layers[l].input_dim;

    Matrix dw(out, in);
    std::vector<double> db(out, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto di = delta.row(i);
      auto xi = x.row(i);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = di[o];
        db[o] += d;
        if (d == 0.0) continue;
        auto dwo = dw.row(o);
        for (std::size_t k = 0; k < in; ++k) dwo[k] += d * xi[k];
      }
    }
    if (model.has_masks()) {
      auto dv = dw.values();
      auto mv = model.masks[l].values();
      for (std::size_t i = 0; i < dv.size(); ++i)
        if (mv[i] == 0.0) dv[i] = 0.0;
    }
    g.weights[l] = std::move(dw);
    g.biases[l] = std::move(db);

    if (l == 0) break;

    // dL/dH of the previous layer, then through its activation.
    Matrix dh(n, in);
    const Matrix& w = model.weights[l];
    for (std::size_t i = 0; i < n; ++i) {
      auto di = delta.row(i);
      auto dhi = dh.row(i);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = di[o];
        if (d == 0.0) continue;
        auto wo = w.row(o);
        for (std::size_t k = 0; k < in; ++k) dhi[k] += d * wo[k];
      }
    }
    Matrix next = dh;
    if (model.layers[l - 1].activation == Activation::ReLU) {
      auto nv = next.values();
      auto zv = trace.pre[l - 1].values();
      for (std::size_t i = 0; i < nv.size(); ++i)
        if (!(zv[i] > 0.0)) nv[i] = 0.0;
    }
    g.hidden_outputs[l - 1] = std::move(dh);
    delta = std::move(next);
  }
  return g;
}

// Mean over all N x K entries of the squared error.
inline double mse_loss(const Matrix& predicted, const Matrix& observed) {
  require_same_shape(predicted, observed, "mse_loss");
  if (predicted.empty()) throw ShapeError("mse_loss: empty input");
  double acc = 0.0;
  auto p = predicted.values();
  auto o = observed.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - o[i];
    acc += d * d;
  }
  return acc / static_cast<double>(p.size());
}

// d(mse)/dY = 2 (Y_hat - Y) / (N K). Shared by the data term of the
// composite loss so that both objectives produce identical gradients.
inline Matrix mse_grad(const Matrix& predicted, const Matrix& observed) {
  require_same_shape(predicted, observed, "mse_grad");
  Matrix g(predicted.rows(), predicted.cols());
  const double scale = 2.0 / static_cast<double>(predicted.size());
  auto p = predicted.values();
  auto o = observed.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < p.size(); ++i) gv[i] = (p[i] - o[i]) * scale;
  return g;
}

}  // namespace pgnn
