#include "npn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace npn {

namespace {

constexpr char kCheckpointMagic[4] = {'N', 'P', 'N', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed,
                                          std::size_t epoch) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(seed, 0x73687566, epoch);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void write_vec(std::ofstream& out, const std::vector<T>& v) {
  write_pod(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}

template <typename T>
std::vector<T> read_vec(std::ifstream& in) {
  const auto n = read_pod<std::uint64_t>(in);
  std::vector<T> v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
  return {
      {"total_epochs", cfg.total_epochs},
      {"warmup_epochs", cfg.warmup_epochs},
      {"batch_size", cfg.batch_size},
      {"alpha", cfg.weights.alpha},
      {"beta", cfg.weights.beta},
      {"mode", to_string(cfg.mode)},
      {"momentum", cfg.momentum},
      {"warmup_lr", cfg.warmup_lr},
      {"robust_base_lr", cfg.robust_base_lr},
      {"augment",
       {{"weak_sigma", cfg.augment.weak_sigma},
        {"strong_sigma", cfg.augment.strong_sigma},
        {"strong_dropout", cfg.augment.strong_dropout}}},
      {"hidden_dims", cfg.hidden_dims},
      {"seed", cfg.seed},
      {"checkpoint_every", cfg.checkpoint_every},
  };
}

}  // namespace

std::string to_string(PllMode mode) {
  switch (mode) {
    case PllMode::hard: return "hard";
    case PllMode::soft: return "soft";
    case PllMode::given_ce: return "none";
  }
  throw std::logic_error("unknown pll mode");
}

PllMode pll_mode_from_string(const std::string& s) {
  if (s == "hard") return PllMode::hard;
  if (s == "soft") return PllMode::soft;
  if (s == "none") return PllMode::given_ce;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

void TrainConfig::validate() const {
  if (warmup_epochs > total_epochs)
    throw std::invalid_argument("warmup_epochs must be <= total_epochs");
  if (total_epochs == 0) throw std::invalid_argument("total_epochs >= 1");
  if (batch_size == 0) throw std::invalid_argument("batch_size >= 1");
  if (weights.alpha < 0.0 || weights.beta < 0.0)
    throw std::invalid_argument("alpha/beta must be >= 0");
  if (augment.weak_sigma < 0.0 || augment.strong_sigma < augment.weak_sigma)
    throw std::invalid_argument("strong_sigma must be >= weak_sigma >= 0");
  if (augment.strong_dropout < 0.0 || augment.strong_dropout >= 1.0)
    throw std::invalid_argument("strong_dropout in [0,1)");
}

LrSchedule TrainConfig::lr_schedule() const {
  return {warmup_epochs, total_epochs, warmup_lr, robust_base_lr};
}

double evaluate(const MlpNetwork& net, const Dataset& test) {
  if (test.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  if (test.dim != net.input_dim())
    throw std::invalid_argument("evaluate: input width mismatch");
  std::size_t correct = 0;
  const std::size_t bs = 256;
  for (std::size_t start = 0; start < test.size(); start += bs) {
    const std::size_t end = std::min(start + bs, test.size());
    Batch x(end - start);
    for (std::size_t n = start; n < end; ++n) x[n - start] = test.row(n);
    Batch logits = forward(net, x);
    for (std::size_t n = start; n < end; ++n)
      if (argmax_index(logits[n - start]) == test.true_labels[n]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(test.size());
}

std::pair<double, double> diagnostics(
    const std::vector<CandidateHistogram>& histograms,
    const std::vector<std::vector<std::uint8_t>>& candidate_membership,
    const std::vector<std::uint16_t>& true_labels) {
  const std::size_t n = true_labels.size();
  if (n == 0) throw std::invalid_argument("diagnostics: zero samples");
  if (histograms.size() != n || candidate_membership.size() != n)
    throw std::invalid_argument("diagnostics: length mismatch");
  std::size_t hits = 0, precise = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (candidate_membership[i][true_labels[i]]) ++hits;
    if (disambiguate(histograms[i]).hard_label == true_labels[i]) ++precise;
  }
  const double denom = static_cast<double>(n);
  return {100.0 * static_cast<double>(hits) / denom,
          100.0 * static_cast<double>(precise) / denom};
}

std::string metrics_csv_header() {
  return "epoch,phase,lr,loss_total,loss_pll,loss_nl,loss_reg,test_acc,"
         "hit_rate,disamb_precision";
}

std::string metrics_csv_row(const EpochMetrics& m) {
  std::string row = std::to_string(m.epoch) + "," + m.phase;
  for (double v : {m.lr, m.loss_total, m.loss_pll, m.loss_nl, m.loss_reg,
                   m.test_accuracy, m.candidate_hit_rate,
                   m.disambiguation_precision})
    row += "," + fmt_double(v);
  return row;
}

Trainer::Trainer(TrainConfig cfg, Dataset train_set, Dataset test_set)
    : cfg_(std::move(cfg)),
      train_(std::move(train_set)),
      test_(std::move(test_set)) {
  cfg_.validate();
  if (train_.num_classes != test_.num_classes || train_.dim != test_.dim)
    throw std::invalid_argument("Trainer: train/test shape mismatch");

  std::vector<std::size_t> dims;
  dims.push_back(train_.dim);
  for (auto h : cfg_.hidden_dims) dims.push_back(h);
  dims.push_back(train_.num_classes);
  net_ = MlpNetwork::init(dims, cfg_.seed);
  opt_ = OptimizerState::init(net_, cfg_.momentum, cfg_.robust_base_lr);

  hists_.resize(train_.size());
  last_candidate_.resize(train_.size());
  for (std::size_t n = 0; n < train_.size(); ++n) {
    hists_[n].counts = one_hot(train_.noisy_labels[n], train_.num_classes);
    hists_[n].epochs_observed = 0;
    last_candidate_[n].assign(train_.num_classes, 0);
    last_candidate_[n][train_.noisy_labels[n]] = 1;
  }
}

EpochMetrics Trainer::finish_epoch(const std::string& phase, double lr,
                                   double total, double pll, double nl,
                                   double reg) {
  epoch_ += 1;
  EpochMetrics m;
  m.epoch = epoch_;
  m.phase = phase;
  m.lr = lr;
  m.loss_total = total;
  m.loss_pll = pll;
  m.loss_nl = nl;
  m.loss_reg = reg;
  m.test_accuracy = evaluate(net_, test_);
  std::tie(m.candidate_hit_rate, m.disambiguation_precision) =
      diagnostics(hists_, last_candidate_, train_.true_labels);
  return m;
}

EpochMetrics Trainer::run_epoch() {
  return epoch_ < cfg_.warmup_epochs ? warmup_epoch() : robust_epoch();
}

EpochMetrics Trainer::warmup_epoch() {
  if (epoch_ >= cfg_.warmup_epochs)
    throw std::logic_error("warmup_epoch: warm-up phase is over");
  const std::size_t this_epoch = epoch_ + 1;
  const double lr = lr_at(cfg_.lr_schedule(), epoch_);
  const auto order = shuffled_indices(train_.size(), cfg_.seed, this_epoch);

  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size();
       start += cfg_.batch_size) {
    const std::size_t end = std::min(start + cfg_.batch_size, order.size());
    const std::size_t bs = end - start;
    Batch weak(bs), raw(bs);
    std::vector<std::size_t> labels(bs);
    for (std::size_t i = 0; i < bs; ++i) {
      const std::size_t n = order[start + i];
      raw[i] = train_.row(n);
      auto rng = make_rng(cfg_.seed, n, this_epoch, 1);
      weak[i] = augment(raw[i], cfg_.augment, View::weak, rng);
      labels[i] = train_.noisy_labels[n];
    }

    ForwardCache cache;
    Batch probs = softmax_batch(forward(net_, weak, &cache));
    LossOutput ce = ce_loss(probs, labels);
    Gradients grads = backward(net_, cache, ce.grad_logits);
    sgd_step(net_, grads, opt_, lr);
    loss_sum += ce.value;
    ++batches;

    // Candidates come from the raw view of the just-updated model.
    Batch raw_probs = softmax_batch(forward(net_, raw));
    for (std::size_t i = 0; i < bs; ++i) {
      const std::size_t n = order[start + i];
      CandidateSet cs = build_candidate_set(
          one_hot(train_.noisy_labels[n], train_.num_classes), raw_probs[i]);
      accumulate(hists_[n], cs);
      last_candidate_[n] = cs.membership;
    }
  }
  return finish_epoch("warmup", lr, loss_sum / static_cast<double>(batches),
                      0.0, 0.0, 0.0);
}

EpochMetrics Trainer::robust_epoch() {
  if (epoch_ < cfg_.warmup_epochs || epoch_ >= cfg_.total_epochs)
    throw std::logic_error("robust_epoch: outside the robust phase");
  const std::size_t this_epoch = epoch_ + 1;
  const double lr = lr_at(cfg_.lr_schedule(), epoch_);
  const auto order = shuffled_indices(train_.size(), cfg_.seed, this_epoch);

  double total_sum = 0.0, pll_sum = 0.0, nl_sum = 0.0, reg_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size();
       start += cfg_.batch_size) {
    const std::size_t end = std::min(start + cfg_.batch_size, order.size());
    const std::size_t bs = end - start;
    Batch raw(bs), weak(bs), strong(bs);
    std::vector<std::size_t> noisy(bs);
    for (std::size_t i = 0; i < bs; ++i) {
      const std::size_t n = order[start + i];
      raw[i] = train_.row(n);
      auto wrng = make_rng(cfg_.seed, n, this_epoch, 1);
      weak[i] = augment(raw[i], cfg_.augment, View::weak, wrng);
      auto srng = make_rng(cfg_.seed, n, this_epoch, 2);
      strong[i] = augment(raw[i], cfg_.augment, View::strong, srng);
      noisy[i] = train_.noisy_labels[n];
    }

    Batch raw_probs = softmax_batch(forward(net_, raw));
    std::vector<ComplementarySet> comps(bs);
    std::vector<Disambiguation> disamb(bs);
    for (std::size_t i = 0; i < bs; ++i) {
      const std::size_t n = order[start + i];
      CandidateSet cs = build_candidate_set(
          one_hot(train_.noisy_labels[n], train_.num_classes), raw_probs[i]);
      comps[i] = build_complementary_set(cs);
      accumulate(hists_[n], cs);
      last_candidate_[n] = cs.membership;
      disamb[i] = disambiguate(hists_[n]);
    }

    ForwardCache weak_cache, strong_cache;
    Batch weak_probs = softmax_batch(forward(net_, weak, &weak_cache));
    Batch strong_probs = softmax_batch(forward(net_, strong, &strong_cache));

    LossOutput pll;
    switch (cfg_.mode) {
      case PllMode::hard: pll = pll_hard_loss(weak_probs, disamb); break;
      case PllMode::soft: pll = pll_soft_loss(weak_probs, disamb); break;
      case PllMode::given_ce: pll = ce_loss(weak_probs, noisy); break;
    }
    LossOutput nl = nl_loss(weak_probs, comps);
    std::vector<std::size_t> pseudo(bs);
    for (std::size_t i = 0; i < bs; ++i)
      pseudo[i] = argmax_index(weak_probs[i]);
    LossOutput reg = reg_loss(strong_probs, pseudo);

    const double total = pll.value + cfg_.weights.alpha * nl.value +
                         cfg_.weights.beta * reg.value;

    // PLL and NL differentiate the weak view; REG the strong view.
    Batch weak_grad = pll.grad_logits;
    for (std::size_t i = 0; i < bs; ++i)
      for (std::size_t c = 0; c < weak_grad[i].size(); ++c)
        weak_grad[i][c] += cfg_.weights.alpha * nl.grad_logits[i][c];
    Batch strong_grad = reg.grad_logits;
    for (auto& row : strong_grad)
      for (double& v : row) v *= cfg_.weights.beta;

    Gradients g = backward(net_, weak_cache, weak_grad);
    Gradients gs = backward(net_, strong_cache, strong_grad);
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
      for (std::size_t i = 0; i < g.weights[l].size(); ++i)
        g.weights[l][i] += gs.weights[l][i];
      for (std::size_t i = 0; i < g.biases[l].size(); ++i)
        g.biases[l][i] += gs.biases[l][i];
    }
    sgd_step(net_, g, opt_, lr);

    total_sum += total;
    pll_sum += pll.value;
    nl_sum += nl.value;
    reg_sum += reg.value;
    ++batches;
  }
  const double nb = static_cast<double>(batches);
  return finish_epoch("robust", lr, total_sum / nb, pll_sum / nb, nl_sum / nb,
                      reg_sum / nb);
}

TrainResult Trainer::train(const std::filesystem::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  std::ofstream csv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    csv.open(out_dir / "metrics.csv");
    if (!csv) throw std::runtime_error("cannot write metrics.csv");
    csv << metrics_csv_header() << "\n";
  }

  TrainResult result;
  try {
    while (epoch_ < cfg_.total_epochs) {
      EpochMetrics m = run_epoch();
      if (csv.is_open()) csv << metrics_csv_row(m) << "\n";
      result.metrics.push_back(std::move(m));
      if (!out_dir.empty() && cfg_.checkpoint_every > 0 &&
          epoch_ % cfg_.checkpoint_every == 0) {
        char name[48];
        std::snprintf(name, sizeof(name), "checkpoint_%04zu.ckpt", epoch_);
        save_checkpoint(out_dir / name);
      }
    }
  } catch (...) {
    if (!out_dir.empty()) save_checkpoint(out_dir / "abort.ckpt");
    throw;
  }

  const std::size_t tail = std::min<std::size_t>(10, result.metrics.size());
  double sum = 0.0;
  for (std::size_t i = result.metrics.size() - tail;
       i < result.metrics.size(); ++i)
    sum += result.metrics[i].test_accuracy;
  result.last10_mean_accuracy = sum / static_cast<double>(tail);
  for (const auto& m : result.metrics)
    result.best_accuracy = std::max(result.best_accuracy, m.test_accuracy);
  result.wallclock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  if (!out_dir.empty()) {
    save_checkpoint(out_dir / "final.ckpt");
    nlohmann::json summary = {
        {"config", config_to_json(cfg_)},
        {"last10_mean_accuracy", result.last10_mean_accuracy},
        {"best_accuracy", result.best_accuracy},
        {"wallclock_seconds", result.wallclock_seconds},
    };
    std::ofstream out(out_dir / "summary.json");
    out << summary.dump(2) << "\n";
  }
  return result;
}

void Trainer::save_checkpoint(const std::filesystem::path& file) const {
  Checkpoint ck{net_, opt_, hists_, last_candidate_, epoch_, cfg_.seed};
  write_checkpoint(ck, file);
}

void Trainer::restore_checkpoint(const std::filesystem::path& file) {
  Checkpoint ck = read_checkpoint(file);
  if (ck.net.layer_dims != net_.layer_dims)
    throw std::runtime_error("checkpoint does not match network shape");
  if (ck.histograms.size() != hists_.size())
    throw std::runtime_error("checkpoint does not match dataset size");
  net_ = std::move(ck.net);
  opt_ = std::move(ck.opt);
  hists_ = std::move(ck.histograms);
  last_candidate_ = std::move(ck.candidate_membership);
  epoch_ = ck.epoch;
}

void write_checkpoint(const Checkpoint& ck,
                      const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out.write(kCheckpointMagic, 4);
  write_pod(out, kCheckpointVersion);

  // params
  std::vector<std::uint64_t> dims(ck.net.layer_dims.begin(),
                                  ck.net.layer_dims.end());
  write_vec(out, dims);
  for (std::size_t l = 0; l < ck.net.num_layers(); ++l) {
    write_vec(out, ck.net.weights[l]);
    write_vec(out, ck.net.biases[l]);
  }
  // optimizer
  write_pod(out, ck.opt.momentum);
  write_pod(out, ck.opt.base_lr);
  write_pod(out, ck.opt.step);
  for (std::size_t l = 0; l < ck.net.num_layers(); ++l) {
    write_vec(out, ck.opt.weight_momentum[l]);
    write_vec(out, ck.opt.bias_momentum[l]);
  }
  // histograms + latest candidate membership
  write_pod(out, static_cast<std::uint64_t>(ck.histograms.size()));
  for (std::size_t n = 0; n < ck.histograms.size(); ++n) {
    write_vec(out, ck.histograms[n].counts);
    write_pod(out, ck.histograms[n].epochs_observed);
    write_vec(out, ck.candidate_membership[n]);
  }
  // rng: streams are derived from (seed, epoch) counters
  write_pod(out, ck.seed);
  write_pod(out, static_cast<std::uint64_t>(ck.epoch));
  if (!out) throw std::runtime_error("short write to " + file.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("missing checkpoint " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw std::runtime_error("bad checkpoint magic");
  if (read_pod<std::uint32_t>(in) != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version");

  Checkpoint ck;
  auto dims = read_vec<std::uint64_t>(in);
  ck.net.layer_dims.assign(dims.begin(), dims.end());
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    ck.net.weights.push_back(read_vec<double>(in));
    ck.net.biases.push_back(read_vec<double>(in));
  }
  ck.opt.momentum = read_pod<double>(in);
  ck.opt.base_lr = read_pod<double>(in);
  ck.opt.step = read_pod<std::uint64_t>(in);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    ck.opt.weight_momentum.push_back(read_vec<double>(in));
    ck.opt.bias_momentum.push_back(read_vec<double>(in));
  }
  const auto n = read_pod<std::uint64_t>(in);
  ck.histograms.resize(n);
  ck.candidate_membership.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ck.histograms[i].counts = read_vec<std::uint32_t>(in);
    ck.histograms[i].epochs_observed = read_pod<std::uint32_t>(in);
    ck.candidate_membership[i] = read_vec<std::uint8_t>(in);
  }
  ck.seed = read_pod<std::uint64_t>(in);
  ck.epoch = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
  return ck;
}

}  // namespace npn
