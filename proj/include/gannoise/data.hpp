#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gannoise/rng.hpp"
#include "gannoise/tensor.hpp"

namespace gannoise {

/// One- or two-mode Gaussian mixture over the real line.
struct GaussianDataSpec {
  std::size_t modes = 1;
  std::vector<double> means;
  std::vector<double> variances;    // sigma^2
  std::vector<double> mix_weights;  // sum to 1

  void validate() const;

  static GaussianDataSpec unimodal(double mean, double variance);
  /// Means {-3, +3}, equal weights, common variance: separation visible at
  /// sigma <= 2 so mode collapse shows up in histograms.
  static GaussianDataSpec bimodal_default(double variance);
};

enum class NoiseDist { standard_normal, uniform_pm1 };

struct NoiseSpec {
  std::size_t dim = 2;
  NoiseDist dist = NoiseDist::standard_normal;
  void validate() const;
};

enum class SplitTag { train, test };

struct ImageDataset {
  Tensor images;  // n x 784, pixels in [-1, 1]
  std::vector<int> labels;
  SplitTag split = SplitTag::train;

  std::size_t size() const { return labels.size(); }
};

/// n x 1 draws; per draw one mode pick (always consumed, so a unimodal spec
/// is bit-identical to a two-mode spec with weights [1,0]) then one normal.
Tensor sample_gaussian_data(const GaussianDataSpec& spec, std::size_t n, RngStream& rng);

/// n x dim i.i.d. noise rows.
Tensor sample_noise(const NoiseSpec& spec, std::size_t n, RngStream& rng);

/// Parsed IDX payload: image tensor (n x rows*cols, u8 mapped to [-1,1] via
/// x/127.5 - 1) or raw labels, depending on the file's magic.
struct IdxPart {
  bool is_images = false;
  Tensor images;
  std::vector<int> labels;
};

/// Big-endian IDX: magic 0x00000803 (images, 3 dims) or 0x00000801 (labels,
/// 1 dim), per-dimension u32 extents, raw u8 payload of exactly the implied
/// length. Throws FormatError naming the observed magic or the expected vs
/// actual byte counts.
IdxPart parse_idx(const std::vector<std::uint8_t>& bytes);

struct MnistData {
  ImageDataset train;
  ImageDataset test;
};

/// Reads the canonical four files (train/t10k images+labels) from dir.
MnistData load_mnist_dir(const std::filesystem::path& dir);

/// Resolves the dataset directory from GANNOISE_MNIST_DIR.
std::filesystem::path mnist_dir_from_env();

}  // namespace gannoise
