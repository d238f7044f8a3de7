#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "gannoise/config.hpp"
#include "gannoise/data.hpp"
#include "gannoise/mlp.hpp"

namespace gannoise {

/// Generator pixel in [-1, 1] onto a byte: -1 -> 0, +1 -> 255 exactly;
/// values outside the range clamp.
std::uint8_t pixel_from_unit(double v);

/// The MlpSpec implied by checkpoint weights: widths from the weight
/// shapes, activations by dataset convention (the checkpoint stores only
/// parameters). Throws ContractError when the output width does not fit the
/// dataset (1 for gaussian, 784 for mnist).
MlpSpec generator_spec_from_params(const Parameters& params, DatasetKind dataset);

/// Writes n generated digits as binary PGM files ("P5\n28 28\n255\n" + 784
/// raw bytes) named sample_0000.pgm... under out_dir; returns the paths.
std::vector<std::filesystem::path> dump_mnist_pgms(const Parameters& g, NoiseDist dist,
                                                   std::size_t n, std::uint64_t seed,
                                                   const std::filesystem::path& out_dir);

struct GaussianDumpPaths {
  std::filesystem::path generated;
  std::filesystem::path real;
};

/// Histograms of 10^4 generated vs 10^4 real samples on one shared grid;
/// each file holds exactly `bins` lines of "bin_center count". Out-of-range
/// samples land in the edge bins so counts always total 10^4.
GaussianDumpPaths dump_gaussian_histograms(const Parameters& g, NoiseDist dist,
                                           const GaussianDataSpec& data, std::size_t bins,
                                           std::uint64_t seed,
                                           const std::filesystem::path& out_dir);

}  // namespace gannoise
