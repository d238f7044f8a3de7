#include "gannoise/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

namespace gannoise {

MlpSpec generator_spec_for(const ExperimentConfig& cfg) {
  if (cfg.dataset == DatasetKind::gaussian) return synthetic_generator_spec(cfg.noise.dim);
  return mnist_generator_spec(cfg.noise.dim);
}

MlpSpec discriminator_spec_for(const ExperimentConfig& cfg) {
  const bool wasserstein = cfg.loss != LossKind::gan_nonsat;
  if (cfg.dataset == DatasetKind::gaussian) return synthetic_discriminator_spec(wasserstein);
  return mnist_discriminator_spec(wasserstein);
}

namespace detail {
namespace {

double mean_of(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s / static_cast<double>(t.size());
}

Parameters init_role(const MlpSpec& spec, Role role, std::uint64_t seed, std::uint64_t stream) {
  RngStream rng(seed, stream);
  Parameters p = init_mlp(spec, rng);
  p.role = role;
  return p;
}

}  // namespace

TrainerCtx::TrainerCtx(const ExperimentConfig& cfg_in, const MnistData* mnist_in)
    : cfg(cfg_in),
      g_spec(generator_spec_for(cfg_in)),
      d_spec(discriminator_spec_for(cfg_in)),
      g(init_role(g_spec, Role::generator, cfg_in.seed, streams::kGeneratorInit)),
      d(init_role(d_spec, Role::discriminator, cfg_in.seed, streams::kDiscriminatorInit)),
      g_opt(cfg_in.optimizer, g),
      d_opt(cfg_in.optimizer, d),
      data_rng(cfg_in.seed, streams::kData),
      noise_rng(cfg_in.seed, streams::kNoise),
      interp_rng(cfg_in.seed, streams::kInterp),
      batch_rng(cfg_in.seed, streams::kBatchIndex),
      mnist(mnist_in) {
  cfg.validate();
  if (cfg.dataset == DatasetKind::mnist && mnist == nullptr)
    throw ContractError("mnist training needs a loaded dataset");
}

Tensor TrainerCtx::real_batch(std::size_t n) {
  if (cfg.dataset == DatasetKind::gaussian)
    return sample_gaussian_data(cfg.data_spec(), n, data_rng);
  const ImageDataset& train = mnist->train;
  const std::size_t w = train.images.cols();
  Tensor out = Tensor::zeros({n, w});
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t src = static_cast<std::size_t>(batch_rng.next_u64() % train.size());
    std::copy_n(train.images.data().begin() + static_cast<long>(src * w), w,
                out.data().begin() + static_cast<long>(r * w));
  }
  return out;
}

Tensor TrainerCtx::noise_batch(std::size_t n) { return sample_noise(cfg.noise, n, noise_rng); }

LossReport d_step(TrainerCtx& ctx) {
  const std::size_t b = ctx.cfg.schedule.batch_size;
  const Tensor x_real = ctx.real_batch(b);
  const Tensor z = ctx.noise_batch(b);
  const Tensor x_fake = mlp_eval(ctx.g, ctx.g_spec, z);  // theta held fixed, off-tape

  ad::Tape t;
  const TapedParams d_leaves = stage_params(t, ctx.d);
  const ad::NodeId sr = mlp_forward(t, d_leaves, ctx.d_spec, t.constant(x_real));
  const ad::NodeId sf = mlp_forward(t, d_leaves, ctx.d_spec, t.constant(x_fake));

  LossReport rep;
  rep.d_scores_real_mean = mean_of(t.value(sr));
  rep.d_scores_fake_mean = mean_of(t.value(sf));

  ad::NodeId loss = ad::kNoNode;
  if (ctx.cfg.loss == LossKind::gan_nonsat) {
    loss = losses::gan_d_loss(t, sr, sf);
    rep.clamp_eps = losses::kScoreClampEps;
  } else {
    // The critic maximizes its value; descent runs on the negation.
    loss = t.neg(losses::wgan_critic_value(t, sr, sf));
    if (ctx.cfg.loss == LossKind::wgan_gp) {
      const losses::Interpolation interp =
          losses::interpolate_pairs(x_real, x_fake, ctx.interp_rng);
      // A leaf, not a constant: the penalty differentiates the score by x.
      const ad::NodeId x_tilde = t.leaf(interp.x_tilde);
      const ad::NodeId gp = losses::gradient_penalty(t, d_leaves, ctx.d_spec, x_tilde, ctx.cfg.gp);
      rep.gp_term = t.value(gp).scalar_value();
      loss = t.add(loss, gp);
    }
  }
  rep.d_loss = t.value(loss).scalar_value();

  const ad::GradientMap grads = t.backward(loss);
  ctx.d_opt.step(ctx.d, collect_grads(grads, d_leaves, ctx.d));
  if (ctx.cfg.loss == LossKind::wgan_clip) ctx.d = losses::clip_weights(ctx.d, ctx.cfg.clip_c);
  return rep;
}

LossReport g_step(TrainerCtx& ctx) {
  const std::size_t b = ctx.cfg.schedule.batch_size;
  const Tensor z = ctx.noise_batch(b);

  ad::Tape t;
  const TapedParams g_leaves = stage_params(t, ctx.g);
  const TapedParams d_frozen = stage_params_frozen(t, ctx.d);  // phi constant this step
  const ad::NodeId fake = mlp_forward(t, g_leaves, ctx.g_spec, t.constant(z));
  const ad::NodeId sf = mlp_forward(t, d_frozen, ctx.d_spec, fake);

  LossReport rep;
  rep.d_scores_fake_mean = mean_of(t.value(sf));

  ad::NodeId loss = ad::kNoNode;
  if (ctx.cfg.loss == LossKind::gan_nonsat) {
    loss = losses::gan_g_loss_nonsaturating(t, sf);
    rep.clamp_eps = losses::kScoreClampEps;
  } else {
    loss = losses::wgan_g_loss(t, sf);
  }
  rep.g_loss = t.value(loss).scalar_value();

  const ad::GradientMap grads = t.backward(loss);
  ctx.g_opt.step(ctx.g, collect_grads(grads, g_leaves, ctx.g));
  return rep;
}

}  // namespace detail

namespace {

/// Evaluation-time sampling in bounded chunks so a 10^4-row batch never
/// stages one huge tape; chunked draws consume the stream exactly like a
/// single call would.
Tensor generate_samples(const Parameters& g, const MlpSpec& spec, const NoiseSpec& noise,
                        std::size_t n, RngStream& rng) {
  const std::size_t out_dim = spec.output_width();
  Tensor out = Tensor::zeros({n, out_dim});
  constexpr std::size_t kChunk = 2048;
  for (std::size_t r0 = 0; r0 < n; r0 += kChunk) {
    const std::size_t m = std::min(kChunk, n - r0);
    const Tensor z = sample_noise(noise, m, rng);
    const Tensor fake = mlp_eval(g, spec, z);
    std::copy(fake.data().begin(), fake.data().end(),
              out.data().begin() + static_cast<long>(r0 * out_dim));
  }
  return out;
}

Tensor first_rows(const Tensor& t, std::size_t m) {
  Tensor out = Tensor::zeros({m, t.cols()});
  std::copy(t.data().begin(), t.data().begin() + static_cast<long>(m * t.cols()),
            out.data().begin());
  return out;
}

}  // namespace

RunResult train_run(const ExperimentConfig& cfg, const MnistData* mnist,
                    const metrics::Embedder* embedder) {
  cfg.validate();
  if (cfg.dataset == DatasetKind::mnist) {
    if (mnist == nullptr) throw ContractError("mnist run needs a loaded dataset");
    if (embedder == nullptr) throw ContractError("mnist run needs the surrogate embedder");
    if (cfg.eval.eval_samples % cfg.eval.is_splits != 0)
      throw ContractError("eval_samples must split evenly into is_splits groups");
    if (cfg.eval.eval_samples / cfg.eval.is_splits < 2)
      throw ContractError("is splits need at least 2 samples each");
  }

  detail::TrainerCtx ctx(cfg, mnist);
  RunResult out;
  out.g_spec = ctx.g_spec;
  out.d_spec = ctx.d_spec;

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&t0] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 t0)
        .count();
  };

  MetricRecord base;
  base.run = run_id(cfg);
  base.fingerprint = fingerprint(cfg);
  base.dataset = cfg.dataset;
  base.loss = cfg.loss;
  base.noise_dim = cfg.noise.dim;
  base.noise_dist = cfg.noise.dist;
  base.seed = cfg.seed;

  RngStream eval_noise(cfg.seed, streams::kEvalNoise);
  RngStream eval_data(cfg.seed, streams::kEvalData);

  // Last finite values, carried into the failure row when a run dies.
  std::optional<double> last_fd, last_jsd, last_fid, last_is_mean, last_is_var;
  std::optional<double> last_d_loss, last_g_loss;

  const auto evaluate = [&](std::size_t step) -> bool {
    const std::size_t n = cfg.eval.eval_samples;
    const Tensor fake = generate_samples(ctx.g, ctx.g_spec, cfg.noise, n, eval_noise);
    if (!fake.all_finite()) return false;

    MetricRecord rec = base;
    rec.step = step;
    if (cfg.dataset == DatasetKind::gaussian) {
      const Tensor real = sample_gaussian_data(cfg.data_spec(), n, eval_data);
      rec.fd = metrics::frechet_distance(real, fake);
      rec.jsd =
          metrics::jsd_histogram_auto(metrics::flatten_samples(real), metrics::flatten_samples(fake));
    } else {
      const Tensor& test_images = mnist->test.images;
      const Tensor real = first_rows(test_images, std::min(n, test_images.rows()));
      rec.fid = metrics::fid(*embedder, real, fake);
      const metrics::IsResult is = metrics::inception_score(*embedder, fake, cfg.eval.is_splits);
      rec.is_mean = is.mean;
      rec.is_var = is.variance;
    }
    rec.d_loss = last_d_loss;
    rec.g_loss = last_g_loss;
    rec.wall_ms = elapsed_ms();
    last_fd = rec.fd;
    last_jsd = rec.jsd;
    last_fid = rec.fid;
    last_is_mean = rec.is_mean;
    last_is_var = rec.is_var;
    out.records.push_back(std::move(rec));
    return true;
  };

  std::size_t step = 0;
  try {
    for (step = 1; step <= cfg.schedule.total_steps; ++step) {
      for (std::size_t k = 0; k < cfg.schedule.n_critic; ++k) {
        const LossReport rep = detail::d_step(ctx);
        if (!std::isfinite(rep.d_loss)) throw DomainError("non-finite discriminator loss");
        out.events.push_back({UpdateKind::d_update, step, rep});
        last_d_loss = rep.d_loss;
      }
      const LossReport rep = detail::g_step(ctx);
      if (!std::isfinite(rep.g_loss)) throw DomainError("non-finite generator loss");
      out.events.push_back({UpdateKind::g_update, step, rep});
      last_g_loss = rep.g_loss;

      if (step % cfg.schedule.eval_every == 0 || step == cfg.schedule.total_steps) {
        if (!evaluate(step)) throw DomainError("non-finite generator samples at evaluation");
      }
    }
  } catch (const DomainError&) {
    // Instability is a result, not an accident: keep the run in the table.
    out.failed = true;
    out.failed_at_step = step;
    MetricRecord rec = base;
    rec.step = step;
    rec.fd = last_fd;
    rec.jsd = last_jsd;
    rec.fid = last_fid;
    rec.is_mean = last_is_mean;
    rec.is_var = last_is_var;
    rec.d_loss = last_d_loss;
    rec.g_loss = last_g_loss;
    rec.failed = true;
    rec.wall_ms = elapsed_ms();
    out.records.push_back(std::move(rec));
  }

  out.g = std::move(ctx.g);
  out.d = std::move(ctx.d);
  return out;
}

}  // namespace gannoise
