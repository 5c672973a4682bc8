#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "npn/data.hpp"
#include "npn/label_space.hpp"
#include "npn/losses.hpp"
#include "npn/model.hpp"

namespace npn {

// Which PLL term the robust phase optimizes. `given_ce` is the ablation
// that keeps training on the given noisy label with weight 1 (NL/REG only).
enum class PllMode { hard, soft, given_ce };

std::string to_string(PllMode mode);
PllMode pll_mode_from_string(const std::string& s);

struct TrainConfig {
  std::size_t total_epochs = 60;
  std::size_t warmup_epochs = 15;
  std::size_t batch_size = 64;
  LossWeights weights;  // alpha, beta
  PllMode mode = PllMode::hard;
  double momentum = 0.9;
  double warmup_lr = 0.05;
  double robust_base_lr = 0.05;
  AugmentSpec augment;
  std::vector<std::size_t> hidden_dims{128, 128};
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 10;

  void validate() const;
  LrSchedule lr_schedule() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;       // 1-based
  std::string phase;           // "warmup" | "robust"
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_pll = 0.0;
  double loss_nl = 0.0;
  double loss_reg = 0.0;
  double test_accuracy = 0.0;          // percent
  double candidate_hit_rate = 0.0;     // percent
  double disambiguation_precision = 0.0;  // percent
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  double last10_mean_accuracy = 0.0;
  double best_accuracy = 0.0;
  double wallclock_seconds = 0.0;
};

double evaluate(const MlpNetwork& net, const Dataset& test);

// (hit rate %, disambiguation precision %) over the train set.
std::pair<double, double> diagnostics(
    const std::vector<CandidateHistogram>& histograms,
    const std::vector<std::vector<std::uint8_t>>& candidate_membership,
    const std::vector<std::uint16_t>& true_labels);

std::string metrics_csv_header();
std::string metrics_csv_row(const EpochMetrics& m);

class Trainer {
 public:
  Trainer(TrainConfig cfg, Dataset train_set, Dataset test_set);

  // One epoch of Algorithm 1; dispatches on phase. Epochs are 1-based.
  EpochMetrics run_epoch();
  EpochMetrics warmup_epoch();
  EpochMetrics robust_epoch();

  // Full run; writes metrics.csv, summary.json and checkpoints when an
  // output directory is given.
  TrainResult train(const std::filesystem::path& out_dir = {});

  const MlpNetwork& net() const { return net_; }
  const std::vector<CandidateHistogram>& histograms() const { return hists_; }
  const std::vector<std::vector<std::uint8_t>>& candidate_membership() const {
    return last_candidate_;
  }
  std::size_t epochs_done() const { return epoch_; }
  const TrainConfig& config() const { return cfg_; }

  void save_checkpoint(const std::filesystem::path& file) const;
  void restore_checkpoint(const std::filesystem::path& file);

 private:
  EpochMetrics finish_epoch(const std::string& phase, double lr, double total,
                            double pll, double nl, double reg);

  TrainConfig cfg_;
  Dataset train_;
  Dataset test_;
  MlpNetwork net_;
  OptimizerState opt_;
  std::vector<CandidateHistogram> hists_;
  std::vector<std::vector<std::uint8_t>> last_candidate_;
  std::size_t epoch_ = 0;  // completed epochs
};

// Checkpoint contents readable without a Trainer (for inspection tools).
struct Checkpoint {
  MlpNetwork net;
  OptimizerState opt;
  std::vector<CandidateHistogram> histograms;
  std::vector<std::vector<std::uint8_t>> candidate_membership;
  std::size_t epoch = 0;
  std::uint64_t seed = 0;
};

void write_checkpoint(const Checkpoint& ck, const std::filesystem::path& file);
Checkpoint read_checkpoint(const std::filesystem::path& file);

}  // namespace npn
