#include <filesystem>
#include <numeric>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "npn/trainer.hpp"

using namespace npn;
namespace fs = std::filesystem;

namespace {

BlobsDataset small_noisy_blobs(std::uint64_t seed = 31,
                               double noise_rate = 0.3) {
  auto blobs = generate_blobs(4, 30, 15, 4, 5.0, seed);
  if (noise_rate > 0) inject_symmetric(blobs.train, noise_rate, seed + 1);
  return blobs;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.total_epochs = 4;
  cfg.warmup_epochs = 2;
  cfg.batch_size = 16;
  cfg.hidden_dims = {16};
  cfg.seed = 5;
  cfg.checkpoint_every = 0;
  return cfg;
}

std::uint64_t hist_sum(const CandidateHistogram& h) {
  return std::accumulate(h.counts.begin(), h.counts.end(), std::uint64_t{0});
}

}  // namespace

TEST_CASE("histograms start as the one-hot noisy labels") {
  auto blobs = small_noisy_blobs();
  Trainer trainer(small_config(), blobs.train, blobs.test);
  for (std::size_t n = 0; n < blobs.train.size(); ++n) {
    const auto& h = trainer.histograms()[n];
    CHECK(hist_sum(h) == 1);
    CHECK(h.counts[blobs.train.noisy_labels[n]] == 1);
    CHECK(h.epochs_observed == 0);
  }
}

TEST_CASE("every histogram sums to 1 + 2t after epoch t") {
  auto blobs = small_noisy_blobs();
  Trainer trainer(small_config(), blobs.train, blobs.test);
  for (std::size_t t = 1; t <= 4; ++t) {
    trainer.run_epoch();
    for (const auto& h : trainer.histograms())
      CHECK(hist_sum(h) == 1 + 2 * t);
  }
}

TEST_CASE("warmup metrics carry the CE loss and populated diagnostics") {
  auto blobs = small_noisy_blobs();
  Trainer trainer(small_config(), blobs.train, blobs.test);
  auto m = trainer.warmup_epoch();
  CHECK(m.epoch == 1);
  CHECK(m.phase == "warmup");
  CHECK(m.loss_total > 0.0);
  CHECK(m.loss_pll == 0.0);
  CHECK(m.test_accuracy >= 0.0);
  CHECK(m.test_accuracy <= 100.0);
  CHECK(m.candidate_hit_rate >= 0.0);
  CHECK(m.candidate_hit_rate <= 100.0);
  CHECK(m.disambiguation_precision >= 0.0);
}

TEST_CASE("robust metrics satisfy the loss decomposition identity") {
  auto blobs = small_noisy_blobs();
  auto cfg = small_config();
  cfg.weights = {0.7, 1.3};
  Trainer trainer(cfg, blobs.train, blobs.test);
  trainer.run_epoch();
  trainer.run_epoch();
  auto m = trainer.run_epoch();
  CHECK(m.phase == "robust");
  CHECK(m.loss_total ==
        doctest::Approx(m.loss_pll + 0.7 * m.loss_nl + 1.3 * m.loss_reg)
            .epsilon(1e-10));
}

TEST_CASE("zero alpha and beta reduce the total to the PLL term") {
  auto blobs = small_noisy_blobs();
  auto cfg = small_config();
  cfg.weights = {0.0, 0.0};
  Trainer trainer(cfg, blobs.train, blobs.test);
  trainer.run_epoch();
  trainer.run_epoch();
  auto m = trainer.run_epoch();
  CHECK(m.loss_total == doctest::Approx(m.loss_pll).epsilon(1e-12));
}

TEST_CASE("phase boundaries are enforced") {
  auto blobs = small_noisy_blobs();
  Trainer trainer(small_config(), blobs.train, blobs.test);
  CHECK_THROWS_AS(trainer.robust_epoch(), std::logic_error);
  trainer.run_epoch();
  trainer.run_epoch();
  CHECK_THROWS_AS(trainer.warmup_epoch(), std::logic_error);
}

TEST_CASE("warmup_epochs of zero skips straight to the robust phase") {
  auto blobs = small_noisy_blobs();
  auto cfg = small_config();
  cfg.warmup_epochs = 0;
  Trainer trainer(cfg, blobs.train, blobs.test);
  auto m = trainer.run_epoch();
  CHECK(m.phase == "robust");
}

TEST_CASE("warmup-only run is pure CE training") {
  auto blobs = small_noisy_blobs();
  auto cfg = small_config();
  cfg.warmup_epochs = cfg.total_epochs;
  Trainer trainer(cfg, blobs.train, blobs.test);
  auto result = trainer.train();
  for (const auto& m : result.metrics) CHECK(m.phase == "warmup");
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto blobs = small_noisy_blobs();
  Trainer a(small_config(), blobs.train, blobs.test);
  Trainer b(small_config(), blobs.train, blobs.test);
  auto ra = a.train();
  auto rb = b.train();
  REQUIRE(ra.metrics.size() == rb.metrics.size());
  for (std::size_t i = 0; i < ra.metrics.size(); ++i)
    CHECK(metrics_csv_row(ra.metrics[i]) == metrics_csv_row(rb.metrics[i]));
  CHECK(a.net().weights == b.net().weights);
}

TEST_CASE("hard and soft modes share the warm-up trajectory") {
  auto blobs = small_noisy_blobs();
  auto hard_cfg = small_config();
  auto soft_cfg = small_config();
  soft_cfg.mode = PllMode::soft;
  Trainer hard(hard_cfg, blobs.train, blobs.test);
  Trainer soft(soft_cfg, blobs.train, blobs.test);
  hard.run_epoch();
  hard.run_epoch();
  soft.run_epoch();
  soft.run_epoch();
  for (std::size_t n = 0; n < blobs.train.size(); ++n)
    CHECK(hard.histograms()[n].counts == soft.histograms()[n].counts);
  CHECK(hard.net().weights == soft.net().weights);
}

TEST_CASE("evaluate on a zero network scores the class-0 frequency") {
  auto blobs = small_noisy_blobs();
  auto net = MlpNetwork::init({4, 4}, 1);
  for (auto& w : net.weights) std::fill(w.begin(), w.end(), 0.0);
  const double acc = evaluate(net, blobs.test);
  std::size_t class0 = 0;
  for (auto l : blobs.test.true_labels)
    if (l == 0) ++class0;
  CHECK(acc == doctest::Approx(100.0 * class0 / blobs.test.size()));
}

TEST_CASE("evaluate is invariant to sample order") {
  auto blobs = small_noisy_blobs();
  auto net = MlpNetwork::init({4, 8, 4}, 2);
  const double before = evaluate(net, blobs.test);
  Dataset reversed = blobs.test;
  for (std::size_t n = 0; n < blobs.test.size(); ++n) {
    const std::size_t m = blobs.test.size() - 1 - n;
    reversed.true_labels[n] = blobs.test.true_labels[m];
    reversed.noisy_labels[n] = blobs.test.noisy_labels[m];
    for (std::size_t d = 0; d < blobs.test.dim; ++d)
      reversed.features[n * blobs.test.dim + d] =
          blobs.test.features[m * blobs.test.dim + d];
  }
  CHECK(evaluate(net, reversed) == before);
}

TEST_CASE("diagnostics validation and hand example") {
  CHECK_THROWS_AS(diagnostics({}, {}, {}), std::invalid_argument);

  std::vector<CandidateHistogram> hists{{{0, 3, 2, 0}, 2}, {{4, 0, 1, 0}, 2}};
  std::vector<std::vector<std::uint8_t>> cand{{0, 1, 1, 0}, {1, 0, 0, 0}};
  std::vector<std::uint16_t> truth{1, 2};
  auto [hit, precision] = diagnostics(hists, cand, truth);
  CHECK(hit == doctest::Approx(50.0));        // only sample 0 contains truth
  CHECK(precision == doctest::Approx(50.0));  // only sample 0 argmax == truth
}

TEST_CASE("uninformative predictions keep precision near the clean fraction") {
  // Stub model: uniformly random top-1 predictions, 40% symmetric noise.
  std::mt19937_64 rng(71);
  const std::size_t C = 10, N = 4000;
  std::vector<std::uint16_t> truth(N), noisy(N);
  std::vector<CandidateHistogram> hists(N);
  std::vector<std::vector<std::uint8_t>> cand(N);
  for (std::size_t n = 0; n < N; ++n) {
    truth[n] = static_cast<std::uint16_t>(rng() % C);
    noisy[n] = truth[n];
    if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.4) {
      std::size_t wrong = rng() % (C - 1);
      if (wrong >= truth[n]) ++wrong;
      noisy[n] = static_cast<std::uint16_t>(wrong);
    }
    hists[n].counts = one_hot(noisy[n], C);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> probs(C, 0.0);
      probs[rng() % C] = 1.0;
      auto cs = build_candidate_set(one_hot(noisy[n], C), probs);
      accumulate(hists[n], cs);
      cand[n] = cs.membership;
    }
  }
  auto [hit, precision] = diagnostics(hists, cand, truth);
  CHECK(precision > 55.0);
  CHECK(precision < 65.0);
  CHECK(hit < 80.0);  // random candidates rarely rescue the truth
}

TEST_CASE("checkpoint round trip resumes an identical run") {
  auto blobs = small_noisy_blobs();
  auto cfg = small_config();
  auto dir = fs::temp_directory_path() / "npn_test_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);

  Trainer full(cfg, blobs.train, blobs.test);
  full.run_epoch();
  full.run_epoch();
  full.save_checkpoint(dir / "mid.ckpt");
  auto m3 = full.run_epoch();
  auto m4 = full.run_epoch();

  Trainer resumed(cfg, blobs.train, blobs.test);
  resumed.restore_checkpoint(dir / "mid.ckpt");
  CHECK(resumed.epochs_done() == 2);
  auto r3 = resumed.run_epoch();
  auto r4 = resumed.run_epoch();
  CHECK(metrics_csv_row(r3) == metrics_csv_row(m3));
  CHECK(metrics_csv_row(r4) == metrics_csv_row(m4));
  CHECK(resumed.net().weights == full.net().weights);

  auto ck = read_checkpoint(dir / "mid.ckpt");
  CHECK(ck.epoch == 2);
  CHECK(ck.histograms.size() == blobs.train.size());
  fs::remove_all(dir);
}

TEST_CASE("train writes metrics, summary and checkpoints") {
  auto blobs = small_noisy_blobs();
  auto cfg = small_config();
  cfg.checkpoint_every = 2;
  auto dir = fs::temp_directory_path() / "npn_test_artifacts";
  fs::remove_all(dir);
  Trainer trainer(cfg, blobs.train, blobs.test);
  auto result = trainer.train(dir);
  CHECK(result.metrics.size() == cfg.total_epochs);
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "final.ckpt"));
  CHECK(fs::exists(dir / "checkpoint_0002.ckpt"));
  CHECK(fs::exists(dir / "checkpoint_0004.ckpt"));
  CHECK(result.last10_mean_accuracy > 0.0);
  fs::remove_all(dir);
}

TEST_CASE("config validation rejects bad values") {
  TrainConfig cfg = small_config();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.warmup_epochs = cfg.total_epochs + 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.augment.strong_sigma = cfg.augment.weak_sigma / 2;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.weights.alpha = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
