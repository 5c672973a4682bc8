#include "npn/label_space.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace npn {

std::size_t argmax_index(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("argmax_index: empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

LabelVector one_hot(std::size_t label, std::size_t num_classes) {
  if (label >= num_classes)
    throw std::invalid_argument("one_hot: label out of range");
  LabelVector v(num_classes, 0);
  v[label] = 1;
  return v;
}

CandidateSet build_candidate_set(const LabelVector& noisy_label,
                                 const std::vector<double>& probs) {
  const std::size_t C = noisy_label.size();
  if (probs.size() != C)
    throw std::invalid_argument(
        "build_candidate_set: label/probs dimension mismatch");
  const std::size_t predicted = argmax_index(probs);

  CandidateSet cs;
  cs.counts.assign(noisy_label.begin(), noisy_label.end());
  cs.counts[predicted] += 1;
  cs.membership.resize(C);
  for (std::size_t c = 0; c < C; ++c) cs.membership[c] = cs.counts[c] > 0;
  return cs;
}

ComplementarySet build_complementary_set(const CandidateSet& candidate) {
  ComplementarySet comp;
  comp.membership.resize(candidate.membership.size());
  for (std::size_t c = 0; c < candidate.membership.size(); ++c)
    comp.membership[c] = !candidate.membership[c];
  return comp;
}

void accumulate(CandidateHistogram& hist, const CandidateSet& candidate) {
  if (hist.counts.size() != candidate.counts.size())
    throw std::invalid_argument("accumulate: dimension mismatch");
  const std::uint64_t total = std::accumulate(
      candidate.counts.begin(), candidate.counts.end(), std::uint64_t{0});
  if (total != 2)
    throw std::invalid_argument("accumulate: candidate counts must sum to 2");
  for (std::size_t c = 0; c < hist.counts.size(); ++c)
    hist.counts[c] += candidate.counts[c];
  hist.epochs_observed += 1;
}

Disambiguation disambiguate(const CandidateHistogram& hist) {
  const std::uint64_t total = std::accumulate(
      hist.counts.begin(), hist.counts.end(), std::uint64_t{0});
  if (total == 0)
    throw std::runtime_error("disambiguate: all-zero histogram");

  Disambiguation d;
  std::size_t best = 0;
  for (std::size_t c = 1; c < hist.counts.size(); ++c)
    if (hist.counts[c] > hist.counts[best]) best = c;
  d.hard_label = best;
  d.hard_weight = static_cast<double>(hist.counts[best]) /
                  static_cast<double>(total);
  d.soft_label.resize(hist.counts.size());
  for (std::size_t c = 0; c < hist.counts.size(); ++c)
    d.soft_label[c] =
        static_cast<double>(hist.counts[c]) / static_cast<double>(total);
  return d;
}

}  // namespace npn
