#pragma once

#include <cstdint>
#include <vector>

#include "gannoise/config.hpp"
#include "gannoise/data.hpp"
#include "gannoise/losses.hpp"
#include "gannoise/metrics.hpp"
#include "gannoise/mlp.hpp"
#include "gannoise/optim.hpp"

namespace gannoise {

enum class UpdateKind { d_update, g_update };

/// One optimizer update in the alternation, in execution order.
struct StepEvent {
  UpdateKind kind = UpdateKind::d_update;
  std::size_t g_step = 0;  // 1-based generator step this update belongs to
  LossReport report;
};

struct RunResult {
  MlpSpec g_spec, d_spec;
  Parameters g, d;
  std::vector<MetricRecord> records;  // one per evaluation (plus failure row)
  std::vector<StepEvent> events;      // full update log
  bool failed = false;
  std::size_t failed_at_step = 0;  // g-step during which the run went non-finite
};

/// Architecture selection per dataset/loss family. Wasserstein critics end
/// in an identity head, GAN discriminators in a sigmoid.
MlpSpec generator_spec_for(const ExperimentConfig& cfg);
MlpSpec discriminator_spec_for(const ExperimentConfig& cfg);

/// Runs one configured experiment: each generator step is preceded by
/// n_critic discriminator steps (simultaneous gradient descent, one-step
/// alternation); metrics are evaluated every eval_every G-steps and at the
/// end. Deterministic in (cfg, dataset bytes). A non-finite loss or gradient
/// marks the run failed — recorded, never dropped.
///
/// MNIST runs require `mnist`, and `embedder` for fid/is evaluation.
RunResult train_run(const ExperimentConfig& cfg, const MnistData* mnist = nullptr,
                    const metrics::Embedder* embedder = nullptr);

namespace detail {

/// Internal single-update entry points, exposed for invariant tests
/// (parameter freezing, update counting).
struct TrainerCtx {
  ExperimentConfig cfg;
  MlpSpec g_spec, d_spec;
  Parameters g, d;
  Optimizer g_opt, d_opt;
  RngStream data_rng, noise_rng, interp_rng, batch_rng;
  const MnistData* mnist = nullptr;

  explicit TrainerCtx(const ExperimentConfig& cfg, const MnistData* mnist = nullptr);

  Tensor real_batch(std::size_t n);
  Tensor noise_batch(std::size_t n);
};

LossReport d_step(TrainerCtx& ctx);
LossReport g_step(TrainerCtx& ctx);

}  // namespace detail

}  // namespace gannoise
