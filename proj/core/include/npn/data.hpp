#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "npn/rng.hpp"

namespace npn {

enum class NoiseKind { none, symmetric, asymmetric };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double rate = 0.0;
  std::uint64_t seed = 0;
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

enum class View { raw, weak, strong };

// Vector-data stand-ins for image augmentation: additive Gaussian noise
// (weak) and Gaussian noise plus coordinate dropout (strong).
struct AugmentSpec {
  double weak_sigma = 0.05;
  double strong_sigma = 0.15;
  double strong_dropout = 0.2;
};

struct Dataset {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<float> features;  // row-major N x dim
  std::vector<std::uint16_t> true_labels;   // evaluation only
  std::vector<std::uint16_t> noisy_labels;
  std::string split = "train";
  std::uint64_t seed = 0;
  NoiseKind noise_kind = NoiseKind::none;
  double noise_rate = 0.0;
  std::vector<double> feature_mean;  // standardization stats (train split)
  std::vector<double> feature_std;

  std::size_t size() const { return true_labels.size(); }
  std::vector<double> row(std::size_t n) const;
  std::size_t corrupted_count() const;
};

struct BlobsDataset {
  Dataset train;
  Dataset test;
};

// Gaussian blobs: class means placed on a sphere of radius `separation`,
// unit-variance samples, standardized with train-split statistics.
BlobsDataset generate_blobs(std::size_t num_classes, std::size_t per_class_train,
                            std::size_t per_class_test, std::size_t dim,
                            double separation, std::uint64_t seed);

// Uniform corruption to any wrong class, total flip probability `rate`.
void inject_symmetric(Dataset& ds, double rate, std::uint64_t seed);

// Corruption to the successor class (mod C) with probability `rate`.
void inject_asymmetric(Dataset& ds, double rate, std::uint64_t seed);

// Applied on-the-fly; the stream must be derived from
// (seed, sample index, epoch, view) so replay is exact.
std::vector<double> augment(const std::vector<double>& x,
                            const AugmentSpec& spec, View view,
                            std::mt19937_64& rng);

// Directory layout: manifest.json, features.bin (f32 LE), true_labels.bin
// and noisy_labels.bin (u16 LE). Round-trip is bit-exact.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

void export_csv(const Dataset& ds, const std::filesystem::path& file);

}  // namespace npn
