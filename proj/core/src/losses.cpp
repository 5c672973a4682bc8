#include "npn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace npn {

namespace {

double clipped(double p) {
  return std::clamp(p, kProbEps, 1.0 - kProbEps);
}

void check_batch(const Batch& probs, std::size_t other_size,
                 const char* who) {
  if (probs.size() != other_size)
    throw std::invalid_argument(std::string(who) + ": batch size mismatch");
  if (probs.empty())
    throw std::invalid_argument(std::string(who) + ": empty batch");
}

Batch zero_like(const Batch& probs) {
  Batch g(probs.size());
  for (std::size_t n = 0; n < probs.size(); ++n)
    g[n].assign(probs[n].size(), 0.0);
  return g;
}

}  // namespace

std::vector<double> softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    p[c] = std::exp(logits[c] - m);
    sum += p[c];
  }
  for (double& v : p) v /= sum;
  return p;
}

Batch softmax_batch(const Batch& logits) {
  Batch p(logits.size());
  for (std::size_t n = 0; n < logits.size(); ++n) p[n] = softmax(logits[n]);
  return p;
}

LossOutput ce_loss(const Batch& probs, const std::vector<std::size_t>& labels) {
  check_batch(probs, labels.size(), "ce_loss");
  const double N = static_cast<double>(probs.size());
  LossOutput out;
  out.grad_logits = zero_like(probs);
  for (std::size_t n = 0; n < probs.size(); ++n) {
    const std::size_t y = labels[n];
    if (y >= probs[n].size())
      throw std::invalid_argument("ce_loss: label out of range");
    out.value += -std::log(clipped(probs[n][y]));
    for (std::size_t c = 0; c < probs[n].size(); ++c)
      out.grad_logits[n][c] = (probs[n][c] - (c == y ? 1.0 : 0.0)) / N;
  }
  out.value /= N;
  return out;
}

LossOutput pll_hard_loss(const Batch& probs,
                         const std::vector<Disambiguation>& disamb) {
  check_batch(probs, disamb.size(), "pll_hard_loss");
  const double N = static_cast<double>(probs.size());
  LossOutput out;
  out.grad_logits = zero_like(probs);
  for (std::size_t n = 0; n < probs.size(); ++n) {
    const std::size_t y = disamb[n].hard_label;
    const double w = disamb[n].hard_weight;
    out.value += w * -std::log(clipped(probs[n][y]));
    for (std::size_t c = 0; c < probs[n].size(); ++c)
      out.grad_logits[n][c] = w * (probs[n][c] - (c == y ? 1.0 : 0.0)) / N;
  }
  out.value /= N;
  return out;
}

LossOutput pll_soft_loss(const Batch& probs,
                         const std::vector<Disambiguation>& disamb) {
  check_batch(probs, disamb.size(), "pll_soft_loss");
  const double N = static_cast<double>(probs.size());
  LossOutput out;
  out.grad_logits = zero_like(probs);
  for (std::size_t n = 0; n < probs.size(); ++n) {
    const auto& soft = disamb[n].soft_label;
    if (soft.size() != probs[n].size())
      throw std::invalid_argument("pll_soft_loss: soft label width mismatch");
    for (std::size_t c = 0; c < probs[n].size(); ++c) {
      if (soft[c] > 0.0) out.value += -soft[c] * std::log(clipped(probs[n][c]));
      out.grad_logits[n][c] = (probs[n][c] - soft[c]) / N;
    }
  }
  out.value /= N;
  return out;
}

LossOutput nl_loss(const Batch& probs,
                   const std::vector<ComplementarySet>& comps) {
  check_batch(probs, comps.size(), "nl_loss");
  const double N = static_cast<double>(probs.size());
  LossOutput out;
  out.grad_logits = zero_like(probs);
  for (std::size_t n = 0; n < probs.size(); ++n) {
    const auto& member = comps[n].membership;
    if (member.size() != probs[n].size())
      throw std::invalid_argument("nl_loss: complementary width mismatch");
    // d/dz_j of -sum_{c in comp} log(1 - p_c), through the softmax:
    //   p_j * [comp_j / (1 - p_j) - sum_{c in comp} p_c / (1 - p_c)]
    double weighted = 0.0;
    for (std::size_t c = 0; c < member.size(); ++c) {
      if (!member[c]) continue;
      out.value += -std::log(clipped(1.0 - probs[n][c]));
      weighted += probs[n][c] / std::max(1.0 - probs[n][c], kProbEps);
    }
    for (std::size_t j = 0; j < member.size(); ++j) {
      const double own =
          member[j] ? 1.0 / std::max(1.0 - probs[n][j], kProbEps) : 0.0;
      out.grad_logits[n][j] = probs[n][j] * (own - weighted) / N;
    }
  }
  out.value /= N;
  return out;
}

LossOutput reg_loss(const Batch& strong_probs,
                    const std::vector<std::size_t>& weak_pseudo) {
  return ce_loss(strong_probs, weak_pseudo);
}

LossOutput combined_loss(const LossOutput& pll, const LossOutput& nl,
                         const LossOutput& reg, const LossWeights& w) {
  LossOutput out;
  out.value = pll.value + w.alpha * nl.value + w.beta * reg.value;
  out.grad_logits = pll.grad_logits;
  for (std::size_t n = 0; n < out.grad_logits.size(); ++n)
    for (std::size_t c = 0; c < out.grad_logits[n].size(); ++c)
      out.grad_logits[n][c] += w.alpha * nl.grad_logits[n][c] +
                               w.beta * reg.grad_logits[n][c];
  return out;
}

}  // namespace npn
