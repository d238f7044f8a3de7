#pragma once

#include <cstdint>
#include <vector>

#include "gannoise/mlp.hpp"
#include "gannoise/tape.hpp"
#include "gannoise/tensor.hpp"

namespace gannoise {

enum class OptKind { sgd, adam };

struct OptimizerConfig {
  OptKind kind = OptKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// Default optimizer settings per loss family (conventions of the cited
// sources; overridable in configs).
OptimizerConfig gan_default_optimizer();   // Adam(2e-4, 0.5, 0.999)
OptimizerConfig wgan_default_optimizer();  // Adam(1e-4, 0.0, 0.9)

/// Mutable views of a parameter set in a fixed order: w0, b0, w1, b1, ...
/// Gradients passed to Optimizer::step must follow the same order.
std::vector<Tensor*> param_tensors(Parameters& params);

/// Gradients for the staged leaves in the same fixed order. Parameters that
/// the root never touched come back as zeros.
std::vector<Tensor> collect_grads(const ad::GradientMap& grads, const TapedParams& staged,
                                  const Parameters& params);

/// SGD or Adam with bias correction; state holds per-parameter moments.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, const Parameters& shape_source);

  /// In-place update. Throws DomainError on a non-finite gradient, naming
  /// the offending tensor.
  void step(Parameters& params, const std::vector<Tensor>& grads);

  std::uint64_t step_count() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

  /// Adjusts the learning rate mid-run (schedules); moments are kept.
  void set_lr(double lr);

 private:
  OptimizerConfig cfg_;
  std::vector<Tensor> m_, v_;  // adam moments, aligned with param_tensors order
  std::uint64_t t_ = 0;
};

}  // namespace gannoise
