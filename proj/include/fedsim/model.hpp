// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fedsim/batch.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/param_vector.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class Activation { Tanh, Relu };
enum class LossKind { Mse, SoftmaxCrossEntropy };

/// Fully connected network: layer_sizes = {in, h1, ..., out}. The activation
/// is applied after every affine layer except the last; the output layer is
/// linear and the loss attaches to it.
struct ModelSpec {
  std::vector<int> layer_sizes;
  Activation activation = Activation::Tanh;
  LossKind loss = LossKind::Mse;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int layer_count() const { return static_cast<int>(layer_sizes.size()) - 1; }

  void validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("ModelSpec: need at least input and output layers");
    for (int s : layer_sizes) {
      if (s <= 0) throw ConfigError("ModelSpec: layer sizes must be positive");
    }
  }

  /// Flat parameter count. Layout per layer: W (in*out, row-major, W[i*out+j]
  /// connects input i to output j) followed by b (out).
  int param_count() const {
    validate();
    int total = 0;
    for (int l = 0; l + 1 < static_cast<int>(layer_sizes.size()); ++l) {
      total += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
    }
    return total;
  }
};

namespace detail {

inline void check_model_args(const ModelSpec& spec, const ParamVector& params,
                             const Batch& batch, const char* what) {
  spec.validate();
  validate_batch(batch, what);
  if (static_cast<int>(params.size()) != spec.param_count()) {
    throw ConfigError(std::string(what) + ": params length " + std::to_string(params.size()) +
                      " does not match model (" + std::to_string(spec.param_count()) + ")");
  }
  if (batch.input_dim != spec.input_dim() || batch.target_dim != spec.output_dim()) {
    throw ConfigError(std::string(what) + ": batch dims do not match model");
  }
  if (batch.n == 0) throw ConfigError(std::string(what) + ": empty batch");
}

/// Forward pass for one sample. acts[l] holds the post-activation output of
/// layer l (acts[0] is the input row, acts.back() the linear network output).
inline void forward_sample(const ModelSpec& spec, const ParamVector& params,
                           const double* x, std::vector<std::vector<double>>& acts) {
  const int L = spec.layer_count();
  acts.resize(L + 1);
  acts[0].assign(x, x + spec.input_dim());
  std::size_t off = 0;
  for (int l = 0; l < L; ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const double* W = params.data() + off;
    const double* b = params.data() + off + static_cast<std::size_t>(in) * out;
    acts[l + 1].assign(b, b + out);
    std::vector<double>& y = acts[l + 1];
    const std::vector<double>& a = acts[l];
    for (int i = 0; i < in; ++i) {
      const double ai = a[i];
      const double* Wrow = W + static_cast<std::size_t>(i) * out;
      for (int j = 0; j < out; ++j) y[j] += ai * Wrow[j];
    }
    if (l + 1 < L) {
      if (spec.activation == Activation::Tanh) {
        for (double& v : y) v = std::tanh(v);
      } else {
        for (double& v : y) v = v > 0.0 ? v : 0.0;
      }
    }
    for (double v : y) {
      if (!std::isfinite(v)) {
        throw NumericError("forward pass: non-finite value at layer " + std::to_string(l));
      }
    }
    off += static_cast<std::size_t>(in) * out + out;
  }
}

/// Loss of one sample given the network output, and (optionally) the
/// derivative of the loss w.r.t. that output.
inline double sample_loss(const ModelSpec& spec, const std::vector<double>& yhat,
                          const double* target, std::vector<double>* dloss) {
  const int out = spec.output_dim();
  if (dloss) dloss->assign(out, 0.0);
  if (spec.loss == LossKind::Mse) {
    double s = 0.0;
    for (int k = 0; k < out; ++k) {
      const double r = yhat[k] - target[k];
      s += 0.5 * r * r;
      if (dloss) (*dloss)[k] = r;
    }
    return s;
  }
  // Softmax cross-entropy with the usual max-shift for stability.
  double m = yhat[0];
  for (int k = 1; k < out; ++k) m = std::max(m, yhat[k]);
  double z = 0.0;
  for (int k = 0; k < out; ++k) z += std::exp(yhat[k] - m);
  const double logz = m + std::log(z);
  double s = 0.0;
  double tsum = 0.0;
  for (int k = 0; k < out; ++k) {
    s -= target[k] * (yhat[k] - logz);
    tsum += target[k];
  }
  if (dloss) {
    for (int k = 0; k < out; ++k) {
      (*dloss)[k] = std::exp(yhat[k] - m) / z * tsum - target[k];
    }
  }
  return s;
}

}  // namespace detail

/// Mean per-sample loss over the batch.
inline double forward_loss(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  detail::check_model_args(spec, params, batch, "forward_loss");
  std::vector<std::vector<double>> acts;
  double total = 0.0;
  for (int s = 0; s < batch.n; ++s) {
    detail::forward_sample(spec, params, batch.input_row(s), acts);
    total += detail::sample_loss(spec, acts.back(), batch.target_row(s), nullptr);
  }
  const double loss = total / batch.n;
  if (!std::isfinite(loss)) throw NumericError("forward_loss: non-finite loss");
  return loss;
}

/// Exact gradient of forward_loss w.r.t. the flat parameters (backprop).
inline ParamVector gradient(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  detail::check_model_args(spec, params, batch, "gradient");
  const int L = spec.layer_count();
  ParamVector grad(params.size(), 0.0);

  std::vector<std::size_t> offsets(L);
  {
    std::size_t off = 0;
    for (int l = 0; l < L; ++l) {
      offsets[l] = off;
      off += static_cast<std::size_t>(spec.layer_sizes[l]) * spec.layer_sizes[l + 1] + spec.layer_sizes[l + 1];
    }
  }

  std::vector<std::vector<double>> acts;
  std::vector<double> delta, delta_prev;
  for (int s = 0; s < batch.n; ++s) {
    detail::forward_sample(spec, params, batch.input_row(s), acts);
    detail::sample_loss(spec, acts.back(), batch.target_row(s), &delta);
    for (int l = L - 1; l >= 0; --l) {
      const int in = spec.layer_sizes[l];
      const int out = spec.layer_sizes[l + 1];
      const double* W = params.data() + offsets[l];
      double* gW = grad.data() + offsets[l];
      double* gb = gW + static_cast<std::size_t>(in) * out;
      const std::vector<double>& a = acts[l];
      for (int j = 0; j < out; ++j) gb[j] += delta[j];
      for (int i = 0; i < in; ++i) {
        const double ai = a[i];
        double* gWrow = gW + static_cast<std::size_t>(i) * out;
        for (int j = 0; j < out; ++j) gWrow[j] += ai * delta[j];
      }
      if (l > 0) {
        delta_prev.assign(in, 0.0);
        for (int i = 0; i < in; ++i) {
          const double* Wrow = W + static_cast<std::size_t>(i) * out;
          double s2 = 0.0;
          for (int j = 0; j < out; ++j) s2 += Wrow[j] * delta[j];
          delta_prev[i] = s2;
        }
        // Activation derivative from the stored post-activation value.
        if (spec.activation == Activation::Tanh) {
          for (int i = 0; i < in; ++i) delta_prev[i] *= 1.0 - a[i] * a[i];
        } else {
          for (int i = 0; i < in; ++i) delta_prev[i] *= a[i] > 0.0 ? 1.0 : 0.0;
        }
        delta.swap(delta_prev);
      }
    }
  }
  const double inv_n = 1.0 / batch.n;
  for (double& g : grad) g *= inv_n;
  check_finite(grad, "gradient");
  return grad;
}

/// Linear network outputs for every sample (n x output_dim, row-major).
inline std::vector<double> forward_outputs(const ModelSpec& spec, const ParamVector& params,
                                           const Batch& batch) {
  detail::check_model_args(spec, params, batch, "forward_outputs");
  std::vector<double> out(static_cast<std::size_t>(batch.n) * spec.output_dim());
  std::vector<std::vector<double>> acts;
  for (int s = 0; s < batch.n; ++s) {
    detail::forward_sample(spec, params, batch.input_row(s), acts);
    std::copy(acts.back().begin(), acts.back().end(),
              out.begin() + static_cast<std::size_t>(s) * spec.output_dim());
  }
  return out;
}

/// Fraction of samples whose argmax output matches the argmax target.
inline double accuracy(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  const std::vector<double> out = forward_outputs(spec, params, batch);
  const int k = spec.output_dim();
  int hits = 0;
  for (int s = 0; s < batch.n; ++s) {
    const double* o = out.data() + static_cast<std::size_t>(s) * k;
    const double* t = batch.target_row(s);
    const int po = static_cast<int>(std::max_element(o, o + k) - o);
    const int pt = static_cast<int>(std::max_element(t, t + k) - t);
    hits += po == pt ? 1 : 0;
  }
  return static_cast<double>(hits) / batch.n;
}

/// Uniform init in (-1/sqrt(in), 1/sqrt(in)) per layer; biases start at zero.
inline ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector p(spec.param_count(), 0.0);
  std::mt19937_64 rng = make_rng(seed);
  std::size_t off = 0;
  for (int l = 0; l + 1 < static_cast<int>(spec.layer_sizes.size()); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int i = 0; i < in * out; ++i) p[off + i] = dist(rng);
    off += static_cast<std::size_t>(in) * out + out;
  }
  return p;
}

}  // namespace fedsim
