#pragma once

#include <cstddef>
#include <vector>

#include "npn/label_space.hpp"

namespace npn {

// Row-major batch of per-sample vectors (probabilities or logits).
using Batch = std::vector<std::vector<double>>;

// Probabilities are clipped to [kProbEps, 1 - kProbEps] inside every log.
inline constexpr double kProbEps = 1e-12;

struct LossOutput {
  double value = 0.0;
  Batch grad_logits;  // d value / d logits, per sample
};

struct LossWeights {
  double alpha = 1.0;
  double beta = 2.0;
};

// Numerically stable softmax (max subtraction).
std::vector<double> softmax(const std::vector<double>& logits);
Batch softmax_batch(const Batch& logits);

// Plain cross-entropy against hard class labels; mean over the batch.
LossOutput ce_loss(const Batch& probs, const std::vector<std::size_t>& labels);

// Hard-disambiguation loss: per-sample reliability weight times CE at the
// disambiguated label.
LossOutput pll_hard_loss(const Batch& probs,
                         const std::vector<Disambiguation>& disamb);

// Soft-disambiguation loss: CE between the normalized histogram and the
// predicted distribution.
LossOutput pll_soft_loss(const Batch& probs,
                         const std::vector<Disambiguation>& disamb);

// Negative-learning loss: -sum over complementary classes of log(1 - p_c).
// An empty complementary set contributes 0.
LossOutput nl_loss(const Batch& probs,
                   const std::vector<ComplementarySet>& comps);

// Consistency loss: CE of the strong-view probabilities against the
// weak-view hard pseudo-label (no gradient through the pseudo-label).
LossOutput reg_loss(const Batch& strong_probs,
                    const std::vector<std::size_t>& weak_pseudo);

// L = L_PLL + alpha * L_NL + beta * L_REG, value and gradient.
LossOutput combined_loss(const LossOutput& pll, const LossOutput& nl,
                         const LossOutput& reg, const LossWeights& w);

}  // namespace npn
