#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trackkit/common.hpp"
#include "trackkit/matrix.hpp"
#include "trackkit/rng.hpp"

namespace trackkit {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double dropout_rate = 0.0;
  std::uint64_t seed = 0;
};

struct Layer {
  Matrix W;  // out x in
  Vector b;
};

enum class Head { Linear, Softmax };

struct Mlp {
  std::vector<std::size_t> dims;
  std::vector<Layer> layers;
  Head head = Head::Linear;

  std::size_t in_dim() const { return dims.front(); }
  std::size_t out_dim() const { return dims.back(); }
};

// He initialization for the ReLU stacks, zero biases.
inline Mlp make_mlp(const std::vector<std::size_t>& dims, Head head, Rng& rng) {
  if (dims.size() < 2) throw ConfigError("make_mlp: need at least two layer dims");
  Mlp net;
  net.dims = dims;
  net.head = head;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.W = Matrix(dims[l + 1], dims[l]);
    layer.b.assign(dims[l + 1], 0.0);
    double scale = std::sqrt(2.0 / static_cast<double>(dims[l]));
    for (double& v : layer.W.data) v = scale * rng.normal();
    net.layers.push_back(std::move(layer));
  }
  return net;
}

struct ForwardCache {
  std::vector<Vector> act;               // act[0] = input, act[l+1] = layer l output
  std::vector<std::vector<char>> drop;   // dropout masks on hidden activations
};

// Forward pass for one sample. Hidden layers are ReLU; inverted dropout when
// a training rng is supplied so evaluation needs no rescaling.
inline Vector mlp_forward(const Mlp& net, const Vector& x, ForwardCache* cache = nullptr,
                          Rng* dropout_rng = nullptr, double dropout = 0.0) {
  if (x.size() != net.in_dim()) throw ConfigError("mlp_forward: input size mismatch");
  Vector a = x;
  if (cache) {
    cache->act.assign(1, a);
    cache->drop.assign(net.layers.size(), {});
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    Vector z(layer.b);
    for (std::size_t i = 0; i < layer.W.rows; ++i)
      for (std::size_t j = 0; j < layer.W.cols; ++j) z[i] += layer.W(i, j) * a[j];
    bool last = l + 1 == net.layers.size();
    if (!last) {
      for (double& v : z) v = std::max(0.0, v);
      if (dropout_rng && dropout > 0.0) {
        std::vector<char> mask(z.size());
        double keep = 1.0 - dropout;
        for (std::size_t i = 0; i < z.size(); ++i) {
          mask[i] = dropout_rng->uniform() < keep ? 1 : 0;
          z[i] = mask[i] ? z[i] / keep : 0.0;
        }
        if (cache) cache->drop[l] = std::move(mask);
      }
    } else if (net.head == Head::Softmax) {
      double m = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double& v : z) {
        v = std::exp(v - m);
        sum += v;
      }
      for (double& v : z) v /= sum;
    }
    a = std::move(z);
    if (cache) cache->act.push_back(a);
  }
  return a;
}

struct Gradients {
  std::vector<Layer> g;  // same shapes as the net's layers

  explicit Gradients(const Mlp& net) {
    for (const Layer& l : net.layers) {
      Layer z;
      z.W = Matrix(l.W.rows, l.W.cols);
      z.b.assign(l.b.size(), 0.0);
      g.push_back(std::move(z));
    }
  }

  void scale(double c) {
    for (Layer& l : g) {
      for (double& v : l.W.data) v *= c;
      for (double& v : l.b) v *= c;
    }
  }
};

// Backprop one sample given dL/d(output). For the softmax head the incoming
// gradient is with respect to the post-softmax output; the Jacobian is
// applied here. Returns dL/d(input).
inline Vector mlp_backward(const Mlp& net, const ForwardCache& cache, Vector dOut,
                           Gradients& grads, double dropout = 0.0) {
  if (net.head == Head::Softmax) {
    const Vector& y = cache.act.back();
    double dot_dy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot_dy += dOut[i] * y[i];
    Vector dz(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) dz[i] = y[i] * (dOut[i] - dot_dy);
    dOut = std::move(dz);
  }
  Vector delta = std::move(dOut);
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& layer = net.layers[li];
    const Vector& a_in = cache.act[li];
    const Vector& a_out = cache.act[li + 1];
    bool last = li + 1 == net.layers.size();
    if (!last) {
      // ReLU (and dropout) act on this layer's output
      double keep = 1.0 - dropout;
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!cache.drop[li].empty()) {
          if (!cache.drop[li][i]) {
            delta[i] = 0.0;
            continue;
          }
          delta[i] /= keep;
        }
        if (a_out[i] <= 0.0) delta[i] = 0.0;
      }
    }
    for (std::size_t i = 0; i < layer.W.rows; ++i) {
      grads.g[li].b[i] += delta[i];
      for (std::size_t j = 0; j < layer.W.cols; ++j) grads.g[li].W(i, j) += delta[i] * a_in[j];
    }
    Vector next(layer.W.cols, 0.0);
    for (std::size_t j = 0; j < layer.W.cols; ++j)
      for (std::size_t i = 0; i < layer.W.rows; ++i) next[j] += layer.W(i, j) * delta[i];
    delta = std::move(next);
  }
  return delta;
}

// Adam with the usual bias correction.
class Adam {
 public:
  Adam(const Mlp& net, double lr) : lr_(lr), m_(net), v_(net) {}

  void step(Mlp& net, const Gradients& grads) {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      update(net.layers[l].W.data, grads.g[l].W.data, m_.g[l].W.data, v_.g[l].W.data, bc1, bc2);
      update(net.layers[l].b, grads.g[l].b, m_.g[l].b, v_.g[l].b, bc1, bc2);
    }
  }

 private:
  void update(Vector& p, const Vector& g, Vector& m, Vector& v, double bc1, double bc2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
      if (!std::isfinite(p[i])) throw SolverError("adam: parameter diverged");
    }
  }

  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::uint64_t t_ = 0;
  Gradients m_, v_;
};

// KL(N(mu, sigma) || N(0,1)) summed over coordinates; sigma = exp(logvar/2).
inline double gaussian_kl(const Vector& mu, const Vector& logvar) {
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    kl += 0.5 * (mu[i] * mu[i] + std::exp(logvar[i]) - 1.0 - logvar[i]);
  return kl;
}

}  // namespace trackkit
