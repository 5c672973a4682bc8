#include <benchmark/benchmark.h>

#include <random>

#include "npn/data.hpp"
#include "npn/model.hpp"
#include "npn/trainer.hpp"

namespace {

npn::Batch random_batch(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  npn::Batch x(n);
  for (auto& row : x) {
    row.resize(dim);
    for (double& v : row) v = g(rng);
  }
  return x;
}

void BM_ForwardBackward(benchmark::State& state) {
  const std::size_t bs = static_cast<std::size_t>(state.range(0));
  auto net = npn::MlpNetwork::init({20, 128, 128, 10}, 1);
  auto x = random_batch(bs, 20, 2);
  std::vector<std::size_t> labels(bs);
  for (std::size_t n = 0; n < bs; ++n) labels[n] = n % 10;
  for (auto _ : state) {
    npn::ForwardCache cache;
    auto probs = npn::softmax_batch(npn::forward(net, x, &cache));
    auto loss = npn::ce_loss(probs, labels);
    auto grads = npn::backward(net, cache, loss.grad_logits);
    benchmark::DoNotOptimize(grads);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(bs));
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(256);

void BM_NlLoss(benchmark::State& state) {
  const std::size_t bs = 256, C = 10;
  auto probs = npn::softmax_batch(random_batch(bs, C, 3));
  std::vector<npn::ComplementarySet> comps(bs);
  std::mt19937_64 rng(4);
  for (auto& comp : comps) {
    comp.membership.resize(C);
    for (auto& m : comp.membership) m = rng() % 2;
  }
  for (auto _ : state) {
    auto out = npn::nl_loss(probs, comps);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_NlLoss);

void BM_WarmupEpoch(benchmark::State& state) {
  auto blobs = npn::generate_blobs(10, 100, 20, 20, 6.0, 5);
  npn::inject_symmetric(blobs.train, 0.4, 6);
  for (auto _ : state) {
    state.PauseTiming();
    npn::TrainConfig cfg;
    cfg.total_epochs = 2;
    cfg.warmup_epochs = 1;
    cfg.seed = 7;
    cfg.checkpoint_every = 0;
    npn::Trainer trainer(cfg, blobs.train, blobs.test);
    state.ResumeTiming();
    trainer.warmup_epoch();
  }
}
BENCHMARK(BM_WarmupEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
