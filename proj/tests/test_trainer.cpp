#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "gannoise/config.hpp"
#include "gannoise/data.hpp"
#include "gannoise/metrics.hpp"
#include "gannoise/mlp.hpp"
#include "gannoise/optim.hpp"
#include "gannoise/rng.hpp"
#include "gannoise/trainer.hpp"

using namespace gannoise;

namespace {

const MnistData& mnist() {
  static const MnistData data = load_mnist_dir(mnist_dir_from_env());
  return data;
}

ExperimentConfig small_gaussian_cfg() {
  ExperimentConfig cfg;
  cfg.dataset = DatasetKind::gaussian;
  cfg.loss = LossKind::gan_nonsat;
  cfg.noise.dim = 3;
  cfg.schedule = {30, 16, 1, 10};
  cfg.optimizer = gan_default_optimizer();
  cfg.eval.eval_samples = 400;
  cfg.seed = 11;
  return cfg;
}

bool params_equal(const Parameters& a, const Parameters& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const Layer& la = a.layers[i];
    const Layer& lb = b.layers[i];
    if (!la.weight.same_shape(lb.weight) || !la.bias.same_shape(lb.bias)) return false;
    for (std::size_t j = 0; j < la.weight.size(); ++j)
      if (la.weight[j] != lb.weight[j]) return false;
    for (std::size_t j = 0; j < la.bias.size(); ++j)
      if (la.bias[j] != lb.bias[j]) return false;
  }
  return true;
}

bool reports_equal(const LossReport& a, const LossReport& b) {
  return a.d_loss == b.d_loss && a.g_loss == b.g_loss && a.gp_term == b.gp_term &&
         a.d_scores_real_mean == b.d_scores_real_mean &&
         a.d_scores_fake_mean == b.d_scores_fake_mean && a.clamp_eps == b.clamp_eps;
}

}  // namespace

// ---------------------------------------------------------------------------
// architecture selection

TEST_CASE("architecture selection follows dataset and loss family") {
  ExperimentConfig cfg;
  cfg.noise.dim = 7;

  CHECK(generator_spec_for(cfg).layer_widths == std::vector<std::size_t>{7, 32, 32, 1});
  CHECK(discriminator_spec_for(cfg).layer_widths == std::vector<std::size_t>{1, 32, 32, 1});
  CHECK(discriminator_spec_for(cfg).output_activation == Activation::sigmoid);

  cfg.loss = LossKind::wgan_gp;
  CHECK(discriminator_spec_for(cfg).output_activation == Activation::identity);
  cfg.loss = LossKind::wgan_clip;
  CHECK(discriminator_spec_for(cfg).output_activation == Activation::identity);

  cfg.dataset = DatasetKind::mnist;
  CHECK(generator_spec_for(cfg).layer_widths == std::vector<std::size_t>{7, 256, 512, 784});
  CHECK(discriminator_spec_for(cfg).layer_widths == std::vector<std::size_t>{784, 512, 256, 1});
}

// ---------------------------------------------------------------------------
// empty schedule

TEST_CASE("total_steps zero returns the initialization untouched") {
  ExperimentConfig cfg = small_gaussian_cfg();
  cfg.schedule.total_steps = 0;

  RunResult run = train_run(cfg);

  RngStream g_rng(cfg.seed, streams::kGeneratorInit);
  Parameters g0 = init_mlp(synthetic_generator_spec(cfg.noise.dim), g_rng);
  RngStream d_rng(cfg.seed, streams::kDiscriminatorInit);
  Parameters d0 = init_mlp(synthetic_discriminator_spec(false), d_rng);

  CHECK(params_equal(run.g, g0));
  CHECK(params_equal(run.d, d0));
  CHECK(run.records.empty());
  CHECK(run.events.empty());
  CHECK(!run.failed);
}

// ---------------------------------------------------------------------------
// determinism

TEST_CASE("same config and seed reproduce checkpoints, events and records bit-identically") {
  ExperimentConfig cfg = small_gaussian_cfg();
  RunResult a = train_run(cfg);
  RunResult b = train_run(cfg);

  CHECK(params_equal(a.g, b.g));
  CHECK(params_equal(a.d, b.d));

  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].kind == b.events[i].kind);
    CHECK(a.events[i].g_step == b.events[i].g_step);
    CHECK(reports_equal(a.events[i].report, b.events[i].report));
  }

  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].run == b.records[i].run);
    CHECK(a.records[i].fingerprint == b.records[i].fingerprint);
    CHECK(a.records[i].step == b.records[i].step);
    CHECK(a.records[i].fd == b.records[i].fd);
    CHECK(a.records[i].jsd == b.records[i].jsd);
    CHECK(a.records[i].d_loss == b.records[i].d_loss);
    CHECK(a.records[i].g_loss == b.records[i].g_loss);
    CHECK(a.records[i].failed == b.records[i].failed);
  }

  SUBCASE("a different seed moves the run") {
    ExperimentConfig other = cfg;
    other.seed = cfg.seed + 1;
    RunResult c = train_run(other);
    CHECK(!params_equal(a.g, c.g));
  }
}

// ---------------------------------------------------------------------------
// update schedule structure

TEST_CASE("event log holds n_critic D-updates before every G-update") {
  ExperimentConfig cfg = small_gaussian_cfg();
  cfg.loss = LossKind::wgan_clip;
  cfg.optimizer = wgan_default_optimizer();
  cfg.schedule = {7, 8, 3, 7};

  RunResult run = train_run(cfg);
  REQUIRE(!run.failed);
  REQUIRE(run.events.size() == 7 * 4);

  std::size_t d_updates = 0, g_updates = 0;
  for (std::size_t i = 0; i < run.events.size(); ++i) {
    const StepEvent& ev = run.events[i];
    const std::size_t expected_step = i / 4 + 1;
    CHECK(ev.g_step == expected_step);
    if (i % 4 == 3) {
      CHECK(ev.kind == UpdateKind::g_update);
      ++g_updates;
    } else {
      CHECK(ev.kind == UpdateKind::d_update);
      ++d_updates;
    }
  }
  CHECK(g_updates == 7);
  CHECK(d_updates == 3 * 7);

  SUBCASE("weight clipping keeps the critic inside the box") {
    for (const Layer& l : run.d.layers) {
      for (double w : l.weight.data()) CHECK(std::abs(w) <= cfg.clip_c);
      for (double b : l.bias.data()) CHECK(std::abs(b) <= cfg.clip_c);
    }
  }
}

// ---------------------------------------------------------------------------
// freezing invariants

TEST_CASE("a D-update leaves theta fixed and a G-update leaves phi fixed") {
  for (LossKind loss : {LossKind::gan_nonsat, LossKind::wgan_clip, LossKind::wgan_gp}) {
    CAPTURE(loss_name(loss));
    ExperimentConfig cfg = small_gaussian_cfg();
    cfg.loss = loss;
    if (loss != LossKind::gan_nonsat) cfg.optimizer = wgan_default_optimizer();

    detail::TrainerCtx ctx(cfg);
    const Parameters g0 = ctx.g;
    const Parameters d0 = ctx.d;

    LossReport d_rep = detail::d_step(ctx);
    CHECK(params_equal(ctx.g, g0));
    CHECK(!params_equal(ctx.d, d0));
    if (loss == LossKind::wgan_gp)
      CHECK(d_rep.gp_term > 0.0);
    else
      CHECK(d_rep.gp_term == 0.0);
    if (loss == LossKind::gan_nonsat)
      CHECK(d_rep.clamp_eps == losses::kScoreClampEps);
    else
      CHECK(d_rep.clamp_eps == 0.0);

    const Parameters d1 = ctx.d;
    detail::g_step(ctx);
    CHECK(params_equal(ctx.d, d1));
    CHECK(!params_equal(ctx.g, g0));
  }
}

// ---------------------------------------------------------------------------
// evaluation cadence

TEST_CASE("metrics are recorded every eval_every steps and at the end") {
  ExperimentConfig cfg = small_gaussian_cfg();
  cfg.schedule = {10, 8, 1, 4};

  RunResult run = train_run(cfg);
  REQUIRE(!run.failed);
  REQUIRE(run.records.size() == 3);
  CHECK(run.records[0].step == 4);
  CHECK(run.records[1].step == 8);
  CHECK(run.records[2].step == 10);

  for (const MetricRecord& rec : run.records) {
    CHECK(rec.run == run_id(cfg));
    CHECK(rec.fingerprint == fingerprint(cfg));
    CHECK(rec.noise_dim == cfg.noise.dim);
    CHECK(rec.seed == cfg.seed);
    CHECK(rec.fd.has_value());
    CHECK(rec.jsd.has_value());
    CHECK(*rec.fd >= 0.0);
    CHECK(*rec.jsd >= 0.0);
    CHECK(!rec.fid.has_value());
    CHECK(!rec.is_mean.has_value());
    CHECK(!rec.is_var.has_value());
    CHECK(rec.d_loss.has_value());
    CHECK(rec.g_loss.has_value());
    CHECK(!rec.failed);
    CHECK(rec.wall_ms >= 0);
  }

  SUBCASE("a final step that lands on the cadence is not recorded twice") {
    ExperimentConfig aligned = small_gaussian_cfg();
    aligned.schedule = {10, 8, 1, 5};
    RunResult r2 = train_run(aligned);
    REQUIRE(r2.records.size() == 2);
    CHECK(r2.records[0].step == 5);
    CHECK(r2.records[1].step == 10);
  }
}

// ---------------------------------------------------------------------------
// training-progress oracle

TEST_CASE("3000 nonsaturating steps beat the untrained generator on Frechet distance") {
  ExperimentConfig cfg;
  cfg.dataset = DatasetKind::gaussian;
  cfg.loss = LossKind::gan_nonsat;
  cfg.noise.dim = 10;
  cfg.schedule = {3000, 256, 1, 3000};
  cfg.optimizer = gan_default_optimizer();
  cfg.eval.eval_samples = 10000;
  cfg.seed = 3;

  // Untrained baseline on exactly the draws the run's evaluation will use.
  RngStream g_rng(cfg.seed, streams::kGeneratorInit);
  const MlpSpec g_spec = synthetic_generator_spec(cfg.noise.dim);
  Parameters g0 = init_mlp(g_spec, g_rng);
  RngStream z_rng(cfg.seed, streams::kEvalNoise);
  RngStream x_rng(cfg.seed, streams::kEvalData);
  const Tensor z = sample_noise(cfg.noise, cfg.eval.eval_samples, z_rng);
  const Tensor fake0 = mlp_eval(g0, g_spec, z);
  const Tensor real = sample_gaussian_data(cfg.data_spec(), cfg.eval.eval_samples, x_rng);
  const double untrained_fd = metrics::frechet_distance(real, fake0);

  RunResult run = train_run(cfg);
  REQUIRE(!run.failed);
  REQUIRE(run.records.size() == 1);
  REQUIRE(run.records[0].fd.has_value());
  CHECK(*run.records[0].fd < untrained_fd);
}

// ---------------------------------------------------------------------------
// failure handling

TEST_CASE("a run that goes non-finite is recorded as failed, not dropped") {
  ExperimentConfig cfg;
  cfg.dataset = DatasetKind::gaussian;
  cfg.loss = LossKind::wgan_gp;
  cfg.noise.dim = 2;
  cfg.schedule = {5, 8, 2, 5};
  cfg.optimizer = wgan_default_optimizer();
  cfg.optimizer.lr = 1e100;  // one update catapults the critic out of range
  cfg.eval.eval_samples = 100;
  cfg.seed = 5;

  RunResult run = train_run(cfg);
  CHECK(run.failed);
  CHECK(run.failed_at_step == 1);
  REQUIRE(run.records.size() == 1);
  const MetricRecord& rec = run.records.back();
  CHECK(rec.failed);
  CHECK(rec.step == 1);
  CHECK(!rec.fd.has_value());   // the run died before any evaluation
  CHECK(!rec.g_loss.has_value());
  CHECK(rec.d_loss.has_value());  // the first critic update still completed
  CHECK(run.events.size() == 1);
  CHECK(run.events[0].kind == UpdateKind::d_update);
}

// ---------------------------------------------------------------------------
// mnist plumbing

TEST_CASE("mnist runs emit fid and is columns via the shared embedder") {
  const MnistData& data = mnist();
  metrics::EmbedderBudget budget;
  budget.steps = 300;  // plumbing check, not a quality gate
  budget.min_accuracy = 0.5;
  const metrics::Embedder emb = metrics::train_embedder(data, 1234, budget);

  ExperimentConfig cfg;
  cfg.dataset = DatasetKind::mnist;
  cfg.loss = LossKind::gan_nonsat;
  cfg.noise.dim = 4;
  cfg.schedule = {2, 8, 1, 1};
  cfg.optimizer = gan_default_optimizer();
  cfg.eval.eval_samples = 50;
  cfg.eval.is_splits = 5;
  cfg.seed = 2;

  RunResult run = train_run(cfg, &data, &emb);
  REQUIRE(!run.failed);
  REQUIRE(run.records.size() == 2);
  for (const MetricRecord& rec : run.records) {
    CHECK(rec.fid.has_value());
    CHECK(*rec.fid >= 0.0);
    CHECK(rec.is_mean.has_value());
    CHECK(*rec.is_mean >= 1.0);
    CHECK(*rec.is_mean <= 10.0);
    CHECK(rec.is_var.has_value());
    CHECK(!rec.fd.has_value());
    CHECK(!rec.jsd.has_value());
  }

  SUBCASE("missing dataset or embedder is a contract error") {
    CHECK_THROWS_AS(train_run(cfg), ContractError);
    CHECK_THROWS_AS(train_run(cfg, &data, nullptr), ContractError);
  }

  SUBCASE("is_splits must divide the evaluation batch into groups of two or more") {
    ExperimentConfig bad = cfg;
    bad.eval.is_splits = 7;
    CHECK_THROWS_AS(train_run(bad, &data, &emb), ContractError);
    bad.eval.eval_samples = 10;
    bad.eval.is_splits = 10;
    CHECK_THROWS_AS(train_run(bad, &data, &emb), ContractError);
  }
}
