#include "gannoise/dump.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "gannoise/metrics.hpp"
#include "gannoise/rng.hpp"

namespace gannoise {

namespace {

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write: " + path.string());
}

}  // namespace

std::uint8_t pixel_from_unit(double v) {
  const double scaled = (std::clamp(v, -1.0, 1.0) + 1.0) * 127.5;
  return static_cast<std::uint8_t>(std::lround(scaled));
}

MlpSpec generator_spec_from_params(const Parameters& params, DatasetKind dataset) {
  if (params.layers.empty()) throw ContractError("checkpoint holds no layers");
  MlpSpec spec;
  spec.layer_widths.push_back(params.layers.front().weight.cols());
  for (const Layer& l : params.layers) spec.layer_widths.push_back(l.weight.rows());

  const std::size_t out_width = spec.layer_widths.back();
  if (dataset == DatasetKind::gaussian) {
    if (out_width != 1)
      throw ContractError("not a gaussian generator: output width " + std::to_string(out_width));
    const MlpSpec reference = synthetic_generator_spec(spec.input_width());
    spec.hidden_activation = reference.hidden_activation;
    spec.output_activation = reference.output_activation;
  } else {
    if (out_width != 784)
      throw ContractError("not a mnist generator: output width " + std::to_string(out_width));
    const MlpSpec reference = mnist_generator_spec(spec.input_width());
    spec.hidden_activation = reference.hidden_activation;
    spec.output_activation = reference.output_activation;
  }
  spec.validate();
  return spec;
}

std::vector<std::filesystem::path> dump_mnist_pgms(const Parameters& g, NoiseDist dist,
                                                   std::size_t n, std::uint64_t seed,
                                                   const std::filesystem::path& out_dir) {
  if (n < 1) throw ContractError("sample count must be >= 1");
  const MlpSpec spec = generator_spec_from_params(g, DatasetKind::mnist);
  const NoiseSpec noise{spec.input_width(), dist};
  std::filesystem::create_directories(out_dir);

  RngStream rng(seed, streams::kNoise);
  const Tensor z = sample_noise(noise, n, rng);
  const Tensor images = mlp_eval(g, spec, z);

  std::vector<std::filesystem::path> paths;
  paths.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string bytes = "P5\n28 28\n255\n";
    bytes.reserve(bytes.size() + 784);
    for (std::size_t p = 0; p < 784; ++p)
      bytes.push_back(static_cast<char>(pixel_from_unit(images.at(i, p))));
    char name[32];
    std::snprintf(name, sizeof name, "sample_%04zu.pgm", i);
    const std::filesystem::path path = out_dir / name;
    write_bytes(path, bytes);
    paths.push_back(path);
  }
  return paths;
}

GaussianDumpPaths dump_gaussian_histograms(const Parameters& g, NoiseDist dist,
                                           const GaussianDataSpec& data, std::size_t bins,
                                           std::uint64_t seed,
                                           const std::filesystem::path& out_dir) {
  if (bins < 1) throw ContractError("bins must be >= 1");
  constexpr std::size_t kSamples = 10000;
  const MlpSpec spec = generator_spec_from_params(g, DatasetKind::gaussian);
  const NoiseSpec noise{spec.input_width(), dist};
  std::filesystem::create_directories(out_dir);

  RngStream z_rng(seed, streams::kNoise);
  RngStream x_rng(seed, streams::kData);
  const Tensor z = sample_noise(noise, kSamples, z_rng);
  const std::vector<double> generated = metrics::flatten_samples(mlp_eval(g, spec, z));
  const std::vector<double> real =
      metrics::flatten_samples(sample_gaussian_data(data, kSamples, x_rng));

  const metrics::HistGrid grid = metrics::default_hist_grid(generated, real);
  const double width = (grid.hi - grid.lo) / static_cast<double>(bins);

  const auto histogram_text = [&](const std::vector<double>& samples) {
    std::vector<std::size_t> counts(bins, 0);
    for (double v : samples) {
      const long long raw = static_cast<long long>(std::floor((v - grid.lo) / width));
      const long long idx = std::clamp(raw, 0LL, static_cast<long long>(bins) - 1);
      ++counts[static_cast<std::size_t>(idx)];
    }
    std::string text;
    for (std::size_t i = 0; i < bins; ++i) {
      const double center = grid.lo + (static_cast<double>(i) + 0.5) * width;
      text += format_double(center) + " " + std::to_string(counts[i]) + "\n";
    }
    return text;
  };

  GaussianDumpPaths paths;
  paths.generated = out_dir / "generated_hist.txt";
  paths.real = out_dir / "real_hist.txt";
  write_bytes(paths.generated, histogram_text(generated));
  write_bytes(paths.real, histogram_text(real));
  return paths;
}

}  // namespace gannoise
