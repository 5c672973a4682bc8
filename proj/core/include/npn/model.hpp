#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "npn/losses.hpp"

namespace npn {

// Fully-connected classifier: ReLU hidden layers, identity (logit) output.
// Weights are row-major [out x in] per layer.
struct MlpNetwork {
  std::vector<std::size_t> layer_dims;  // [D_in, H_1, ..., H_k, C]
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t num_layers() const { return weights.size(); }

  // Glorot-uniform weights, zero biases, reproducible from the seed.
  static MlpNetwork init(const std::vector<std::size_t>& dims,
                         std::uint64_t seed);
};

// Activations retained by forward() for the matching backward() call.
struct ForwardCache {
  Batch input;
  std::vector<Batch> post;  // post-activation output of each layer
};

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

Batch forward(const MlpNetwork& net, const Batch& inputs,
              ForwardCache* cache = nullptr);

Gradients backward(const MlpNetwork& net, const ForwardCache& cache,
                   const Batch& grad_logits);

// Classic heavy-ball momentum: v <- mu*v + g; theta <- theta - lr*v.
struct OptimizerState {
  std::vector<std::vector<double>> weight_momentum;
  std::vector<std::vector<double>> bias_momentum;
  double momentum = 0.9;
  double base_lr = 0.05;
  std::uint64_t step = 0;

  static OptimizerState init(const MlpNetwork& net, double momentum,
                             double base_lr);
};

void sgd_step(MlpNetwork& net, const Gradients& grads, OptimizerState& opt,
              double lr);

// Constant lr through warm-up, cosine decay to 0 over the robust phase.
struct LrSchedule {
  std::size_t warmup_epochs = 0;
  std::size_t total_epochs = 1;
  double warmup_lr = 0.05;
  double robust_base_lr = 0.05;
};

double lr_at(const LrSchedule& schedule, std::size_t epoch);

}  // namespace npn
