#pragma once

#include <vector>

#include "gannoise/mlp.hpp"
#include "gannoise/rng.hpp"
#include "gannoise/tape.hpp"
#include "gannoise/tensor.hpp"

namespace gannoise {

/// One training step's loss summary.
struct LossReport {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double gp_term = 0.0;  // 0 when the loss family has no penalty
  double d_scores_real_mean = 0.0;
  double d_scores_fake_mean = 0.0;
  double clamp_eps = 0.0;  // score clamp width applied before logs (audit)
};

struct GpConfig {
  double lambda = 10.0;
  void validate() const {
    if (lambda < 0.0) throw ContractError("gp lambda must be >= 0");
  }
};

namespace losses {

/// Scores are clamped to [eps, 1-eps] before any log. Values outside [0,1]
/// are rejected; exact 0/1 (a saturated sigmoid) is saved by the clamp.
inline constexpr double kScoreClampEps = 1e-7;
inline constexpr double kDefaultClip = 0.01;

// --- differentiable builders (recorded on the tape) ------------------------

/// -mean(log D(x)) - mean(log(1 - D(G(z)))); the discriminator minimizes it.
ad::NodeId gan_d_loss(ad::Tape& t, ad::NodeId scores_real, ad::NodeId scores_fake);

/// -mean(log D(G(z))): the non-saturating generator loss.
ad::NodeId gan_g_loss_nonsaturating(ad::Tape& t, ad::NodeId scores_fake);

/// mean(log(1 - D(G(z)))): the original minimax form; kept for tests only.
ad::NodeId gan_g_loss_saturating(ad::Tape& t, ad::NodeId scores_fake);

/// mean(real) - mean(fake); the critic maximizes this value.
ad::NodeId wgan_critic_value(ad::Tape& t, ad::NodeId scores_real, ad::NodeId scores_fake);

/// -mean(fake): what the Wasserstein generator minimizes.
ad::NodeId wgan_g_loss(ad::Tape& t, ad::NodeId scores_fake);

/// lambda * mean_rows((||grad_x D(x_tilde)||_2 - 1)^2), differentiable in
/// the critic parameters through the recorded backward pass.
ad::NodeId gradient_penalty(ad::Tape& t, const TapedParams& critic, const MlpSpec& spec,
                            ad::NodeId x_tilde, const GpConfig& gp);

// --- value-level conveniences ----------------------------------------------

double gan_d_loss(const Tensor& scores_real, const Tensor& scores_fake);
double gan_g_loss_nonsaturating(const Tensor& scores_fake);
double wgan_critic_value(const Tensor& scores_real, const Tensor& scores_fake);

// --- weight clamp and interpolation sampler ---------------------------------

/// Every weight and bias mapped to min(max(w, -c), +c). Pure.
Parameters clip_weights(const Parameters& params, double c);

struct Interpolation {
  Tensor x_tilde;
  std::vector<double> eps;  // one epsilon per batch row
};

/// x_tilde_i = eps_i * real_i + (1 - eps_i) * fake_i with given eps.
Interpolation interpolate_with_eps(const Tensor& x_real, const Tensor& x_fake,
                                   std::vector<double> eps);

/// Same, drawing eps_i ~ uniform[0,1) per row from rng.
Interpolation interpolate_pairs(const Tensor& x_real, const Tensor& x_fake, RngStream& rng);

}  // namespace losses
}  // namespace gannoise
