#include "npn/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace npn {

namespace {

using nlohmann::json;

constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t fnv1a(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_blob(const std::filesystem::path& file, const void* data,
                std::size_t len) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  if (!out) throw std::runtime_error("short write to " + file.string());
}

std::vector<char> read_blob(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("missing file " + file.string());
  const auto len = in.tellg();
  in.seekg(0);
  std::vector<char> buf(static_cast<std::size_t>(len));
  in.read(buf.data(), len);
  if (!in) throw std::runtime_error("short read from " + file.string());
  return buf;
}

Dataset make_split(std::size_t num_classes, std::size_t per_class,
                   std::size_t dim, const std::vector<double>& means,
                   std::uint64_t seed, std::uint64_t split_tag,
                   const std::string& split) {
  Dataset ds;
  ds.num_classes = num_classes;
  ds.dim = dim;
  ds.split = split;
  ds.seed = seed;
  const std::size_t n_total = num_classes * per_class;
  ds.features.resize(n_total * dim);
  ds.true_labels.resize(n_total);
  ds.noisy_labels.resize(n_total);
  for (std::size_t n = 0; n < n_total; ++n) {
    const std::size_t cls = n / per_class;
    ds.true_labels[n] = static_cast<std::uint16_t>(cls);
    ds.noisy_labels[n] = static_cast<std::uint16_t>(cls);
    auto rng = make_rng(seed, split_tag, n);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t d = 0; d < dim; ++d)
      ds.features[n * dim + d] =
          static_cast<float>(means[cls * dim + d] + unit(rng));
  }
  return ds;
}

void standardize(Dataset& ds, const std::vector<double>& mean,
                 const std::vector<double>& std_dev) {
  for (std::size_t n = 0; n < ds.size(); ++n)
    for (std::size_t d = 0; d < ds.dim; ++d) {
      double v = ds.features[n * ds.dim + d];
      ds.features[n * ds.dim + d] =
          static_cast<float>((v - mean[d]) / std_dev[d]);
    }
  ds.feature_mean = mean;
  ds.feature_std = std_dev;
}

}  // namespace

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::symmetric: return "symmetric";
    case NoiseKind::asymmetric: return "asymmetric";
  }
  throw std::logic_error("unknown noise kind");
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "none") return NoiseKind::none;
  if (s == "symmetric") return NoiseKind::symmetric;
  if (s == "asymmetric") return NoiseKind::asymmetric;
  throw std::invalid_argument("unknown noise kind '" + s + "'");
}

std::vector<double> Dataset::row(std::size_t n) const {
  std::vector<double> x(dim);
  for (std::size_t d = 0; d < dim; ++d) x[d] = features[n * dim + d];
  return x;
}

std::size_t Dataset::corrupted_count() const {
  std::size_t c = 0;
  for (std::size_t n = 0; n < size(); ++n)
    if (noisy_labels[n] != true_labels[n]) ++c;
  return c;
}

BlobsDataset generate_blobs(std::size_t num_classes,
                            std::size_t per_class_train,
                            std::size_t per_class_test, std::size_t dim,
                            double separation, std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("generate_blobs: C >= 2");
  if (per_class_train < 1 || per_class_test < 1)
    throw std::invalid_argument("generate_blobs: per_class >= 1");
  if (dim < 2) throw std::invalid_argument("generate_blobs: dim >= 2");
  if (separation < 0.0)
    throw std::invalid_argument("generate_blobs: separation >= 0");

  // Class means: random unit directions scaled to the separation radius.
  std::vector<double> means(num_classes * dim, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto rng = make_rng(seed, 0x6d65616e, c);
    std::normal_distribution<double> unit(0.0, 1.0);
    double norm2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      means[c * dim + d] = unit(rng);
      norm2 += means[c * dim + d] * means[c * dim + d];
    }
    const double scale =
        norm2 > 0.0 ? separation / std::sqrt(norm2) : 0.0;
    for (std::size_t d = 0; d < dim; ++d) means[c * dim + d] *= scale;
  }

  BlobsDataset out;
  out.train = make_split(num_classes, per_class_train, dim, means, seed, 1,
                         "train");
  out.test =
      make_split(num_classes, per_class_test, dim, means, seed, 2, "test");

  // Standardization statistics come from the clean train split only.
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  const double n_train = static_cast<double>(out.train.size());
  for (std::size_t n = 0; n < out.train.size(); ++n)
    for (std::size_t d = 0; d < dim; ++d)
      mean[d] += out.train.features[n * dim + d];
  for (double& m : mean) m /= n_train;
  for (std::size_t n = 0; n < out.train.size(); ++n)
    for (std::size_t d = 0; d < dim; ++d) {
      const double delta = out.train.features[n * dim + d] - mean[d];
      var[d] += delta * delta;
    }
  std::vector<double> std_dev(dim);
  for (std::size_t d = 0; d < dim; ++d)
    std_dev[d] = std::max(std::sqrt(var[d] / n_train), 1e-12);

  standardize(out.train, mean, std_dev);
  standardize(out.test, mean, std_dev);
  return out;
}

void inject_symmetric(Dataset& ds, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("inject_symmetric: rate in [0,1)");
  if (ds.split != "train")
    throw std::invalid_argument("inject_symmetric: train split only");
  const std::size_t C = ds.num_classes;
  for (std::size_t n = 0; n < ds.size(); ++n) {
    auto rng = make_rng(seed, 0x73796d, n);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) >= rate) continue;
    std::uniform_int_distribution<std::size_t> pick(0, C - 2);
    std::size_t wrong = pick(rng);
    if (wrong >= ds.true_labels[n]) ++wrong;  // skip the true class
    ds.noisy_labels[n] = static_cast<std::uint16_t>(wrong);
  }
  ds.noise_kind = NoiseKind::symmetric;
  ds.noise_rate = rate;
}

void inject_asymmetric(Dataset& ds, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("inject_asymmetric: rate in [0,1)");
  if (ds.split != "train")
    throw std::invalid_argument("inject_asymmetric: train split only");
  for (std::size_t n = 0; n < ds.size(); ++n) {
    auto rng = make_rng(seed, 0x6173796d, n);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) >= rate) continue;
    ds.noisy_labels[n] = static_cast<std::uint16_t>(
        (ds.true_labels[n] + 1) % ds.num_classes);
  }
  ds.noise_kind = NoiseKind::asymmetric;
  ds.noise_rate = rate;
}

std::vector<double> augment(const std::vector<double>& x,
                            const AugmentSpec& spec, View view,
                            std::mt19937_64& rng) {
  if (view == View::raw) return x;
  const double sigma =
      view == View::weak ? spec.weak_sigma : spec.strong_sigma;
  std::vector<double> out(x.size());
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t d = 0; d < x.size(); ++d)
    out[d] = x[d] + (sigma > 0.0 ? sigma * noise(rng) : 0.0);
  if (view == View::strong && spec.strong_dropout > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (double& v : out)
      if (coin(rng) < spec.strong_dropout) v = 0.0;
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::size_t feat_bytes = ds.features.size() * sizeof(float);
  const std::size_t label_bytes = ds.size() * sizeof(std::uint16_t);
  write_blob(dir / "features.bin", ds.features.data(), feat_bytes);
  write_blob(dir / "true_labels.bin", ds.true_labels.data(), label_bytes);
  write_blob(dir / "noisy_labels.bin", ds.noisy_labels.data(), label_bytes);

  json manifest = {
      {"format_version", kFormatVersion},
      {"num_classes", ds.num_classes},
      {"num_samples", ds.size()},
      {"dim", ds.dim},
      {"split", ds.split},
      {"seed", ds.seed},
      {"noise", {{"kind", to_string(ds.noise_kind)}, {"rate", ds.noise_rate}}},
      {"feature_mean", ds.feature_mean},
      {"feature_std", ds.feature_std},
      {"checksums",
       {{"features", fnv1a(ds.features.data(), feat_bytes)},
        {"true_labels", fnv1a(ds.true_labels.data(), label_bytes)},
        {"noisy_labels", fnv1a(ds.noisy_labels.data(), label_bytes)}}},
  };
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest");
  out << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in)
    throw std::runtime_error("missing manifest.json in " + dir.string());
  json manifest = json::parse(in);

  Dataset ds;
  if (manifest.at("format_version").get<std::uint32_t>() != kFormatVersion)
    throw std::runtime_error("unsupported dataset format_version");
  ds.num_classes = manifest.at("num_classes").get<std::size_t>();
  ds.dim = manifest.at("dim").get<std::size_t>();
  ds.split = manifest.at("split").get<std::string>();
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.noise_kind =
      noise_kind_from_string(manifest.at("noise").at("kind").get<std::string>());
  ds.noise_rate = manifest.at("noise").at("rate").get<double>();
  ds.feature_mean = manifest.at("feature_mean").get<std::vector<double>>();
  ds.feature_std = manifest.at("feature_std").get<std::vector<double>>();
  const std::size_t n = manifest.at("num_samples").get<std::size_t>();

  auto feats = read_blob(dir / "features.bin");
  if (feats.size() != n * ds.dim * sizeof(float))
    throw std::runtime_error("features.bin size does not match manifest");
  ds.features.resize(n * ds.dim);
  std::memcpy(ds.features.data(), feats.data(), feats.size());

  auto load_labels = [&](const char* name) {
    auto raw = read_blob(dir / name);
    if (raw.size() != n * sizeof(std::uint16_t))
      throw std::runtime_error(std::string(name) +
                               " size does not match manifest");
    std::vector<std::uint16_t> labels(n);
    std::memcpy(labels.data(), raw.data(), raw.size());
    for (auto l : labels)
      if (l >= ds.num_classes)
        throw std::runtime_error(std::string(name) + ": label out of range");
    return labels;
  };
  ds.true_labels = load_labels("true_labels.bin");
  ds.noisy_labels = load_labels("noisy_labels.bin");

  const auto& sums = manifest.at("checksums");
  if (fnv1a(ds.features.data(), feats.size()) !=
          sums.at("features").get<std::uint64_t>() ||
      fnv1a(ds.true_labels.data(), n * 2) !=
          sums.at("true_labels").get<std::uint64_t>() ||
      fnv1a(ds.noisy_labels.data(), n * 2) !=
          sums.at("noisy_labels").get<std::uint64_t>())
    throw std::runtime_error("dataset checksum failure in " + dir.string());
  return ds;
}

void export_csv(const Dataset& ds, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "index,true_label,noisy_label";
  for (std::size_t d = 0; d < ds.dim; ++d) out << ",f" << d;
  out << "\n";
  char buf[64];
  for (std::size_t n = 0; n < ds.size(); ++n) {
    out << n << "," << ds.true_labels[n] << "," << ds.noisy_labels[n];
    for (std::size_t d = 0; d < ds.dim; ++d) {
      std::snprintf(buf, sizeof(buf), ",%.9g",
                    static_cast<double>(ds.features[n * ds.dim + d]));
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace npn
