#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace npn {

// Multi-hot label counts over C classes. A one-hot label sums to 1.
using LabelVector = std::vector<std::uint32_t>;

// Per-epoch candidate label set: the given noisy label plus the model's
// top-predicted class. counts always sums to 2 (a single entry of 2 when
// they agree); membership is the clamped boolean view.
struct CandidateSet {
  std::vector<std::uint32_t> counts;
  std::vector<std::uint8_t> membership;
};

// Exact set complement of a CandidateSet's membership.
struct ComplementarySet {
  std::vector<std::uint8_t> membership;
};

// Running per-class frequency of candidate membership across epochs.
// Starts as the one-hot noisy label; after t accumulations sums to 1 + 2t.
struct CandidateHistogram {
  std::vector<std::uint32_t> counts;
  std::uint32_t epochs_observed = 0;
};

// Hard and soft disambiguation of a histogram. hard_label is the argmax
// (lowest index on ties), hard_weight its frequency share, soft_label the
// normalized histogram.
struct Disambiguation {
  std::size_t hard_label = 0;
  double hard_weight = 0.0;
  std::vector<double> soft_label;
};

// Lowest index wins on exact ties.
std::size_t argmax_index(const std::vector<double>& v);

CandidateSet build_candidate_set(const LabelVector& noisy_label,
                                 const std::vector<double>& probs);

ComplementarySet build_complementary_set(const CandidateSet& candidate);

void accumulate(CandidateHistogram& hist, const CandidateSet& candidate);

Disambiguation disambiguate(const CandidateHistogram& hist);

LabelVector one_hot(std::size_t label, std::size_t num_classes);

}  // namespace npn
