#include "npn/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "npn/rng.hpp"

namespace npn {

MlpNetwork MlpNetwork::init(const std::vector<std::size_t>& dims,
                            std::uint64_t seed) {
  if (dims.size() < 2)
    throw std::invalid_argument("MlpNetwork: need at least input and output");
  MlpNetwork net;
  net.layer_dims = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    auto rng = make_rng(seed, 0x6d6c70, l);
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> w(fan_out * fan_in);
    for (double& v : w) v = dist(rng);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(fan_out, 0.0);
  }
  return net;
}

Batch forward(const MlpNetwork& net, const Batch& inputs,
              ForwardCache* cache) {
  if (cache) {
    cache->input = inputs;
    cache->post.assign(net.num_layers(), {});
  }
  Batch cur = inputs;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const std::size_t in = net.layer_dims[l], out = net.layer_dims[l + 1];
    const bool hidden = l + 1 < net.num_layers();
    Batch next(cur.size());
    for (std::size_t n = 0; n < cur.size(); ++n) {
      if (cur[n].size() != in)
        throw std::invalid_argument("forward: input width mismatch");
      next[n].resize(out);
      const double* x = cur[n].data();
      for (std::size_t j = 0; j < out; ++j) {
        const double* w = &net.weights[l][j * in];
        double acc = net.biases[l][j];
        for (std::size_t k = 0; k < in; ++k) acc += w[k] * x[k];
        next[n][j] = hidden ? std::max(0.0, acc) : acc;
      }
    }
    if (cache) cache->post[l] = next;
    cur = std::move(next);
  }
  return cur;
}

Gradients backward(const MlpNetwork& net, const ForwardCache& cache,
                   const Batch& grad_logits) {
  if (cache.post.size() != net.num_layers() || cache.input.empty())
    throw std::invalid_argument("backward: cache does not match network");
  if (grad_logits.size() != cache.input.size())
    throw std::invalid_argument("backward: gradient batch size mismatch");

  Gradients g;
  g.weights.resize(net.num_layers());
  g.biases.resize(net.num_layers());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    g.weights[l].assign(net.weights[l].size(), 0.0);
    g.biases[l].assign(net.biases[l].size(), 0.0);
  }

  Batch delta = grad_logits;
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    const std::size_t in = net.layer_dims[l], out = net.layer_dims[l + 1];
    const Batch& below = l == 0 ? cache.input : cache.post[l - 1];
    Batch prev_delta;
    if (l > 0) {
      prev_delta.resize(delta.size());
      for (auto& row : prev_delta) row.assign(in, 0.0);
    }
    for (std::size_t n = 0; n < delta.size(); ++n) {
      const double* x = below[n].data();
      for (std::size_t j = 0; j < out; ++j) {
        const double d = delta[n][j];
        if (d == 0.0) continue;
        g.biases[l][j] += d;
        double* gw = &g.weights[l][j * in];
        for (std::size_t k = 0; k < in; ++k) gw[k] += d * x[k];
        if (l > 0) {
          const double* w = &net.weights[l][j * in];
          for (std::size_t k = 0; k < in; ++k) prev_delta[n][k] += d * w[k];
        }
      }
      if (l > 0) {
        // ReLU mask of the layer below
        for (std::size_t k = 0; k < in; ++k)
          if (cache.post[l - 1][n][k] <= 0.0) prev_delta[n][k] = 0.0;
      }
    }
    delta = std::move(prev_delta);
  }
  return g;
}

OptimizerState OptimizerState::init(const MlpNetwork& net, double momentum,
                                    double base_lr) {
  OptimizerState opt;
  opt.momentum = momentum;
  opt.base_lr = base_lr;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    opt.weight_momentum.emplace_back(net.weights[l].size(), 0.0);
    opt.bias_momentum.emplace_back(net.biases[l].size(), 0.0);
  }
  return opt;
}

void sgd_step(MlpNetwork& net, const Gradients& grads, OptimizerState& opt,
              double lr) {
  if (grads.weights.size() != net.num_layers())
    throw std::invalid_argument("sgd_step: gradient shape mismatch");
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    if (grads.weights[l].size() != net.weights[l].size() ||
        grads.biases[l].size() != net.biases[l].size())
      throw std::invalid_argument("sgd_step: gradient shape mismatch");
    for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
      double& v = opt.weight_momentum[l][i];
      v = opt.momentum * v + grads.weights[l][i];
      net.weights[l][i] -= lr * v;
    }
    for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
      double& v = opt.bias_momentum[l][i];
      v = opt.momentum * v + grads.biases[l][i];
      net.biases[l][i] -= lr * v;
    }
  }
  opt.step += 1;
}

double lr_at(const LrSchedule& schedule, std::size_t epoch) {
  if (epoch >= schedule.total_epochs)
    throw std::out_of_range("lr_at: epoch out of range");
  if (epoch < schedule.warmup_epochs) return schedule.warmup_lr;
  const double span =
      static_cast<double>(schedule.total_epochs - schedule.warmup_epochs);
  const double progress =
      static_cast<double>(epoch - schedule.warmup_epochs) / span;
  return schedule.robust_base_lr * 0.5 *
         (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace npn
