// Command-line harness: dataset generation, training, sweeps and
// checkpoint inspection for the noisy-label toolkit.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "npn/data.hpp"
#include "npn/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&t));
  return buf;
}

fs::path default_out_root() {
  if (const char* env = std::getenv("NPN_OUT")) return fs::path(env);
  return fs::path("runs");
}

void write_failed_marker(const fs::path& dir) {
  if (dir.empty() || !fs::exists(dir)) return;
  std::ofstream(dir / "FAILED") << "run did not complete\n";
}

struct GenDataArgs {
  std::size_t classes = 10;
  std::size_t per_class = 500;
  std::size_t test_per_class = 100;
  std::size_t dim = 20;
  double separation = 6.0;
  std::string noise = "none";
  double rate = 0.0;
  std::uint64_t seed = 1;
  std::string out;
  bool force = false;
  std::string format = "bin";
};

int cmd_gen_data(const GenDataArgs& a) {
  const npn::NoiseKind kind = npn::noise_kind_from_string(a.noise);
  if (kind != npn::NoiseKind::none && (a.rate < 0.0 || a.rate >= 1.0))
    throw ValidationError("--rate must be in [0,1)");
  if (kind == npn::NoiseKind::asymmetric && a.rate > 0.5)
    throw ValidationError("asymmetric rate above 0.5 is not supported");
  if (a.out.empty()) throw ValidationError("--out is required");
  const fs::path dir(a.out);
  if (fs::exists(dir) && !fs::is_empty(dir) && !a.force)
    throw ValidationError("output directory exists; pass --force to replace");

  auto blobs = npn::generate_blobs(a.classes, a.per_class, a.test_per_class,
                                   a.dim, a.separation, a.seed);
  if (kind == npn::NoiseKind::symmetric)
    npn::inject_symmetric(blobs.train, a.rate, a.seed);
  else if (kind == npn::NoiseKind::asymmetric)
    npn::inject_asymmetric(blobs.train, a.rate, a.seed);

  npn::save_dataset(blobs.train, dir / "train");
  npn::save_dataset(blobs.test, dir / "test");
  if (a.format == "csv") {
    npn::export_csv(blobs.train, dir / "train.csv");
    npn::export_csv(blobs.test, dir / "test.csv");
  }

  const std::size_t corrupted = blobs.train.corrupted_count();
  std::printf("wrote %s: %zu train / %zu test samples, C=%zu, dim=%zu\n",
              dir.string().c_str(), blobs.train.size(), blobs.test.size(),
              a.classes, a.dim);
  std::printf("noise %s rate %.3f: %zu corrupted (empirical %.4f)\n",
              a.noise.c_str(), a.rate, corrupted,
              static_cast<double>(corrupted) /
                  static_cast<double>(blobs.train.size()));
  return 0;
}

struct TrainArgs {
  std::string data;
  npn::TrainConfig cfg;
  std::string mode = "hard";
  std::vector<std::size_t> hidden{128, 128};
  std::string out;
  std::string run_dir;  // exact directory; overrides the timestamp scheme
  bool force = false;
  int threads = 1;
};

void echo_config(const npn::TrainConfig& cfg, const std::string& data,
                 const fs::path& dir) {
  json echo = {
      {"data", data},
      {"total_epochs", cfg.total_epochs},
      {"warmup_epochs", cfg.warmup_epochs},
      {"batch_size", cfg.batch_size},
      {"alpha", cfg.weights.alpha},
      {"beta", cfg.weights.beta},
      {"mode", npn::to_string(cfg.mode)},
      {"momentum", cfg.momentum},
      {"warmup_lr", cfg.warmup_lr},
      {"robust_base_lr", cfg.robust_base_lr},
      {"weak_sigma", cfg.augment.weak_sigma},
      {"strong_sigma", cfg.augment.strong_sigma},
      {"strong_dropout", cfg.augment.strong_dropout},
      {"hidden_dims", cfg.hidden_dims},
      {"seed", cfg.seed},
      {"checkpoint_every", cfg.checkpoint_every},
  };
  std::ofstream(dir / "config_resolved.json") << echo.dump(2) << "\n";
}

fs::path resolve_run_dir(const TrainArgs& a) {
  if (!a.run_dir.empty()) {
    const fs::path dir(a.run_dir);
    if (fs::exists(dir) && !fs::is_empty(dir) && !a.force)
      throw ValidationError("run directory exists; pass --force to replace");
    return dir;
  }
  const fs::path root = a.out.empty() ? default_out_root() : fs::path(a.out);
  return root / (timestamp() + "-" + std::to_string(a.cfg.seed) + "-" +
                 a.mode);
}

npn::TrainConfig resolve_config(TrainArgs& a) {
  npn::TrainConfig cfg = a.cfg;
  cfg.mode = npn::pll_mode_from_string(a.mode);
  cfg.hidden_dims = a.hidden;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  if (a.data.empty()) throw ValidationError("--data is required");
  return cfg;
}

int cmd_train(TrainArgs& a) {
  npn::TrainConfig cfg = resolve_config(a);
  auto train_set = npn::load_dataset(fs::path(a.data) / "train");
  auto test_set = npn::load_dataset(fs::path(a.data) / "test");

  const fs::path dir = resolve_run_dir(a);
  fs::create_directories(dir);
  echo_config(cfg, a.data, dir);
  try {
    npn::Trainer trainer(cfg, std::move(train_set), std::move(test_set));
    auto result = trainer.train(dir);
    std::printf("run %s done: last10 mean %.2f%%, best %.2f%% (%.1fs)\n",
                dir.string().c_str(), result.last10_mean_accuracy,
                result.best_accuracy, result.wallclock_seconds);
  } catch (...) {
    write_failed_marker(dir);
    throw;
  }
  return 0;
}

struct SweepArgs {
  TrainArgs train;
  std::vector<double> alphas;
  std::vector<double> betas;
};

int cmd_sweep(SweepArgs& a) {
  if (a.alphas.empty() || a.betas.empty())
    throw ValidationError("--alphas and --betas must be non-empty");
  npn::TrainConfig base = resolve_config(a.train);
  auto train_set = npn::load_dataset(fs::path(a.train.data) / "train");
  auto test_set = npn::load_dataset(fs::path(a.train.data) / "test");

  const fs::path root = a.train.run_dir.empty()
                            ? resolve_run_dir(a.train)
                            : fs::path(a.train.run_dir);
  fs::create_directories(root);

  std::ofstream agg(root / "sweep.csv");
  agg << "alpha,beta,last10_mean_acc,best_acc\n";
  double best = -1.0;
  double best_alpha = 0.0, best_beta = 0.0;
  try {
    for (double alpha : a.alphas) {
      for (double beta : a.betas) {
        npn::TrainConfig cfg = base;
        cfg.weights = {alpha, beta};
        char cell[64];
        std::snprintf(cell, sizeof(cell), "a%g-b%g", alpha, beta);
        const fs::path dir = root / cell;
        fs::create_directories(dir);
        echo_config(cfg, a.train.data, dir);
        npn::Trainer trainer(cfg, train_set, test_set);
        auto result = trainer.train(dir);
        char row[128];
        std::snprintf(row, sizeof(row), "%.10g,%.10g,%.10g,%.10g\n", alpha,
                      beta, result.last10_mean_accuracy,
                      result.best_accuracy);
        agg << row;
        std::printf("cell %s: last10 mean %.2f%%\n", cell,
                    result.last10_mean_accuracy);
        if (result.last10_mean_accuracy > best) {
          best = result.last10_mean_accuracy;
          best_alpha = alpha;
          best_beta = beta;
        }
      }
    }
  } catch (...) {
    write_failed_marker(root);
    throw;
  }
  std::printf("best cell: alpha=%g beta=%g (%.2f%%)\n", best_alpha, best_beta,
              best);
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
};

int cmd_eval(const EvalArgs& a) {
  auto ck = npn::read_checkpoint(a.checkpoint);
  auto test_set = npn::load_dataset(fs::path(a.data) / "test");
  std::printf("test accuracy: %.4f%%\n", npn::evaluate(ck.net, test_set));
  return 0;
}

struct InspectArgs {
  std::string checkpoint;
  std::string data;
  std::vector<long long> indices;
  bool all = false;
  std::string format = "text";
};

void print_sample(std::size_t n, const npn::Dataset& train,
                  const npn::Checkpoint& ck, bool csv) {
  const auto& hist = ck.histograms[n];
  const auto d = npn::disambiguate(hist);
  const auto& cand = ck.candidate_membership[n];
  if (csv) {
    std::printf("%zu,%u,%u,%zu,%.6g", n, train.noisy_labels[n],
                train.true_labels[n], d.hard_label, d.hard_weight);
    for (auto c : hist.counts) std::printf(",%u", c);
    std::printf("\n");
    return;
  }
  std::printf("sample %zu: noisy=%u true=%u\n", n, train.noisy_labels[n],
              train.true_labels[n]);
  std::printf("  histogram (t=%u):", hist.epochs_observed);
  for (auto c : hist.counts) std::printf(" %u", c);
  std::printf("\n  hard=%zu weight=%.4f\n  soft:", d.hard_label,
              d.hard_weight);
  for (auto s : d.soft_label) std::printf(" %.4f", s);
  std::printf("\n  candidate:");
  for (std::size_t c = 0; c < cand.size(); ++c)
    if (cand[c]) std::printf(" %zu", c);
  std::printf("\n  complementary:");
  for (std::size_t c = 0; c < cand.size(); ++c)
    if (!cand[c]) std::printf(" %zu", c);
  std::printf("\n");
}

int cmd_inspect(const InspectArgs& a) {
  auto ck = npn::read_checkpoint(a.checkpoint);
  auto train_set = npn::load_dataset(fs::path(a.data) / "train");
  if (train_set.size() != ck.histograms.size())
    throw ValidationError("checkpoint does not match the dataset");
  const bool csv = a.format == "csv";
  if (csv) {
    std::printf("index,noisy_label,true_label,hard_label,hard_weight");
    for (std::size_t c = 0; c < train_set.num_classes; ++c)
      std::printf(",s%zu", c);
    std::printf("\n");
  }
  if (a.all) {
    for (std::size_t n = 0; n < train_set.size(); ++n)
      print_sample(n, train_set, ck, csv);
    return 0;
  }
  if (a.indices.empty())
    throw ValidationError("pass --index (repeatable) or --all");
  for (long long idx : a.indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= train_set.size())
      throw ValidationError("--index out of range");
    print_sample(static_cast<std::size_t>(idx), train_set, ck, csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy-label learning toolkit (candidate + complementary "
               "label decomposition)"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a blobs dataset");
  gen_cmd->add_option("--classes", gen.classes, "Class count")->capture_default_str();
  gen_cmd->add_option("--per-class", gen.per_class, "Train samples per class")->capture_default_str();
  gen_cmd->add_option("--test-per-class", gen.test_per_class, "Test samples per class")->capture_default_str();
  gen_cmd->add_option("--dim", gen.dim, "Feature dimension")->capture_default_str();
  gen_cmd->add_option("--separation", gen.separation, "Class mean radius")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "none|symmetric|asymmetric")->capture_default_str();
  gen_cmd->add_option("--rate", gen.rate, "Noise rate")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_flag("--force", gen.force, "Replace an existing directory");
  gen_cmd->add_option("--format", gen.format, "bin|csv (csv adds CSV exports)")->capture_default_str();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Run the training loop");
  auto add_train_opts = [](CLI::App* cmd, TrainArgs& t) {
    cmd->add_option("--data", t.data, "Dataset directory (train/ + test/)")->required();
    cmd->add_option("--mode", t.mode, "hard|soft|none")->capture_default_str();
    cmd->add_option("--alpha", t.cfg.weights.alpha, "NL loss weight")->capture_default_str();
    cmd->add_option("--beta", t.cfg.weights.beta, "Consistency loss weight")->capture_default_str();
    cmd->add_option("--epochs", t.cfg.total_epochs, "Total epochs")->capture_default_str();
    cmd->add_option("--warmup", t.cfg.warmup_epochs, "Warm-up epochs")->capture_default_str();
    cmd->add_option("--batch-size", t.cfg.batch_size, "Mini-batch size")->capture_default_str();
    cmd->add_option("--momentum", t.cfg.momentum, "SGD momentum")->capture_default_str();
    cmd->add_option("--warmup-lr", t.cfg.warmup_lr, "Warm-up learning rate")->capture_default_str();
    cmd->add_option("--lr", t.cfg.robust_base_lr, "Robust-phase base learning rate")->capture_default_str();
    cmd->add_option("--weak-sigma", t.cfg.augment.weak_sigma, "Weak view noise scale")->capture_default_str();
    cmd->add_option("--strong-sigma", t.cfg.augment.strong_sigma, "Strong view noise scale")->capture_default_str();
    cmd->add_option("--strong-dropout", t.cfg.augment.strong_dropout, "Strong view dropout")->capture_default_str();
    cmd->add_option("--hidden", t.hidden, "Hidden layer widths")->capture_default_str();
    cmd->add_option("--seed", t.cfg.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--checkpoint-every", t.cfg.checkpoint_every, "Checkpoint cadence (epochs)")->capture_default_str();
    cmd->add_option("--out", t.out, "Output root (default $NPN_OUT or runs/)");
    cmd->add_option("--run-dir", t.run_dir, "Exact run directory");
    cmd->add_flag("--force", t.force, "Replace an existing run directory");
    cmd->add_option("--threads", t.threads, "Worker threads (1 = verification mode)")->capture_default_str();
  };
  add_train_opts(train_cmd, train);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid sweep over alpha/beta");
  add_train_opts(sweep_cmd, sweep.train);
  sweep_cmd->add_option("--alphas", sweep.alphas, "Alpha grid")->required()->delimiter(',');
  sweep_cmd->add_option("--betas", sweep.betas, "Beta grid")->required()->delimiter(',');

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", eval.data, "Dataset directory")->required();

  InspectArgs inspect;
  auto* inspect_cmd =
      app.add_subcommand("inspect", "Per-sample label-state report");
  inspect_cmd->add_option("--checkpoint", inspect.checkpoint, "Checkpoint file")->required();
  inspect_cmd->add_option("--data", inspect.data, "Dataset directory")->required();
  inspect_cmd->add_option("--index", inspect.indices, "Sample index (repeatable)");
  inspect_cmd->add_flag("--all", inspect.all, "Report every train sample");
  inspect_cmd->add_option("--format", inspect.format, "text|csv")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // all parse failures are validation errors
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen);
    if (train_cmd->parsed()) return cmd_train(train);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep);
    if (eval_cmd->parsed()) return cmd_eval(eval);
    if (inspect_cmd->parsed()) return cmd_inspect(inspect);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 2;
  }
  return 0;
}
