#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "gannoise/rng.hpp"
#include "gannoise/tape.hpp"
#include "gannoise/tensor.hpp"

namespace gannoise {

enum class Activation { identity, relu, leaky_relu, tanh_act, sigmoid };

/// Layer widths input -> hidden... -> output plus the two activation slots.
struct MlpSpec {
  std::vector<std::size_t> layer_widths;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::identity;

  std::size_t input_width() const { return layer_widths.front(); }
  std::size_t output_width() const { return layer_widths.back(); }
  std::size_t layer_count() const { return layer_widths.size() - 1; }

  /// Throws ContractError unless there is at least one hidden layer and
  /// every width is >= 1.
  void validate() const;
};

enum class Role { generator, discriminator };

struct Layer {
  Tensor weight;  // out x in
  Tensor bias;    // 1 x out
};

struct Parameters {
  Role role = Role::generator;
  std::vector<Layer> layers;

  std::size_t scalar_count() const;
};

/// Xavier-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
/// Deterministic in the rng state; draws weights layer by layer, row-major.
Parameters init_mlp(const MlpSpec& spec, RngStream& rng);

/// Parameter leaves staged on a tape so gradients can be taken per layer.
struct TapedParams {
  std::vector<ad::NodeId> weights;
  std::vector<ad::NodeId> biases;
};

TapedParams stage_params(ad::Tape& tape, const Parameters& params);

/// Stages parameters as constants: the forward pass works as usual but no
/// gradients are built for them (a frozen network in an adversarial step).
TapedParams stage_params_frozen(ad::Tape& tape, const Parameters& params);

/// Records the full forward pass; returns the output node (batch x out).
/// `input` must already live on `tape` with width layer_widths[0].
ad::NodeId mlp_forward(ad::Tape& tape, const TapedParams& staged, const MlpSpec& spec,
                       ad::NodeId input);

/// Convenience forward on a throwaway tape (evaluation paths).
Tensor mlp_eval(const Parameters& params, const MlpSpec& spec, const Tensor& input);

ad::NodeId apply_activation(ad::Tape& tape, ad::NodeId x, Activation act);

/// Binary checkpoint, little-endian: magic "GNWT", version u32, layer count
/// u32, then per layer rows u32, cols u32, row-major f64 weights, f64 biases.
/// The same container is reused by the metrics embedder under magic "GNEM".
void save_checkpoint(const Parameters& params, const std::filesystem::path& path,
                     const char* magic = "GNWT");
Parameters load_checkpoint(const std::filesystem::path& path, Role role = Role::generator,
                           const char* magic = "GNWT");

// Default architectures. The discriminator ends in sigmoid for the GAN
// losses and identity (unbounded critic) for the Wasserstein losses.
MlpSpec synthetic_generator_spec(std::size_t noise_dim);
MlpSpec synthetic_discriminator_spec(bool wasserstein);
MlpSpec mnist_generator_spec(std::size_t noise_dim);
MlpSpec mnist_discriminator_spec(bool wasserstein);

}  // namespace gannoise
