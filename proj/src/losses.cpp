#include "gannoise/losses.hpp"

#include <cmath>
#include <string>

namespace gannoise::losses {

namespace {

using ad::NodeId;
using ad::Tape;

void check_unit_scores(const Tensor& s, const char* what) {
  for (double v : s.data()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw DomainError(std::string(what) + " score " + std::to_string(v) +
                        " outside [0,1]; expected sigmoid output");
  }
}

void check_finite_scores(const Tensor& s, const char* what) {
  if (!s.all_finite()) throw DomainError(std::string(what) + " critic scores are not finite");
}

NodeId clamped(Tape& t, NodeId scores) {
  return t.clamp(scores, kScoreClampEps, 1.0 - kScoreClampEps);
}

}  // namespace

NodeId gan_d_loss(Tape& t, NodeId scores_real, NodeId scores_fake) {
  check_unit_scores(t.value(scores_real), "real");
  check_unit_scores(t.value(scores_fake), "fake");
  NodeId lr = t.mean(t.log_fn(clamped(t, scores_real)));
  NodeId lf = t.mean(t.log_fn(t.affine(clamped(t, scores_fake), -1.0, 1.0)));
  return t.neg(t.add(lr, lf));
}

NodeId gan_g_loss_nonsaturating(Tape& t, NodeId scores_fake) {
  check_unit_scores(t.value(scores_fake), "fake");
  return t.neg(t.mean(t.log_fn(clamped(t, scores_fake))));
}

NodeId gan_g_loss_saturating(Tape& t, NodeId scores_fake) {
  check_unit_scores(t.value(scores_fake), "fake");
  return t.mean(t.log_fn(t.affine(clamped(t, scores_fake), -1.0, 1.0)));
}

NodeId wgan_critic_value(Tape& t, NodeId scores_real, NodeId scores_fake) {
  check_finite_scores(t.value(scores_real), "real");
  check_finite_scores(t.value(scores_fake), "fake");
  return t.sub(t.mean(scores_real), t.mean(scores_fake));
}

NodeId wgan_g_loss(Tape& t, NodeId scores_fake) {
  check_finite_scores(t.value(scores_fake), "fake");
  return t.neg(t.mean(scores_fake));
}

NodeId gradient_penalty(Tape& t, const TapedParams& critic, const MlpSpec& spec,
                        NodeId x_tilde, const GpConfig& gp) {
  gp.validate();
  // copy the extent: value() references invalidate as the tape grows
  if (t.value(x_tilde).rank() != 2)
    throw ShapeError("gradient_penalty wants a batch x dim input");
  const std::size_t dim = t.value(x_tilde).cols();

  NodeId score = mlp_forward(t, critic, spec, x_tilde);
  // Rows pass through the network independently, so the gradient of the
  // batch sum w.r.t. the input stacks the per-row input gradients.
  NodeId total = t.sum(score);
  auto grads = t.backward_nodes(total);
  auto it = grads.find(x_tilde);
  if (it == grads.end())
    throw ContractError("gradient_penalty: critic output does not depend on its input");
  NodeId gx = it->second;  // batch x dim

  NodeId ones = t.constant(Tensor::full({dim, 1}, 1.0));
  NodeId row_sq = t.matmul(t.square(gx), ones);             // batch x 1
  NodeId norm = t.sqrt_fn(t.affine(row_sq, 1.0, 1e-12));    // batch x 1
  NodeId excess = t.affine(norm, 1.0, -1.0);
  return t.affine(t.mean(t.square(excess)), gp.lambda, 0.0);
}

double gan_d_loss(const Tensor& scores_real, const Tensor& scores_fake) {
  Tape t;
  return t.value(gan_d_loss(t, t.leaf(scores_real), t.leaf(scores_fake))).scalar_value();
}

double gan_g_loss_nonsaturating(const Tensor& scores_fake) {
  Tape t;
  return t.value(gan_g_loss_nonsaturating(t, t.leaf(scores_fake))).scalar_value();
}

double wgan_critic_value(const Tensor& scores_real, const Tensor& scores_fake) {
  Tape t;
  return t.value(wgan_critic_value(t, t.leaf(scores_real), t.leaf(scores_fake))).scalar_value();
}

Parameters clip_weights(const Parameters& params, double c) {
  if (c <= 0.0) throw ContractError("clip constant must be positive");
  Parameters out = params;
  for (Layer& l : out.layers) {
    for (double& w : l.weight.data()) w = std::min(std::max(w, -c), c);
    for (double& b : l.bias.data()) b = std::min(std::max(b, -c), c);
  }
  return out;
}

Interpolation interpolate_with_eps(const Tensor& x_real, const Tensor& x_fake,
                                   std::vector<double> eps) {
  if (!x_real.same_shape(x_fake))
    throw ShapeError("interpolate_pairs: batch shapes differ: " + shape_str(x_real.shape()) +
                     " vs " + shape_str(x_fake.shape()));
  if (x_real.rank() != 2) throw ShapeError("interpolate_pairs wants batch x dim tensors");
  if (eps.size() != x_real.rows())
    throw ShapeError("interpolate_pairs: need one epsilon per row");

  Interpolation out;
  out.x_tilde = Tensor::zeros(x_real.shape());
  for (std::size_t r = 0; r < x_real.rows(); ++r) {
    double e = eps[r];
    for (std::size_t c = 0; c < x_real.cols(); ++c)
      out.x_tilde.at(r, c) = e * x_real.at(r, c) + (1.0 - e) * x_fake.at(r, c);
  }
  out.eps = std::move(eps);
  return out;
}

Interpolation interpolate_pairs(const Tensor& x_real, const Tensor& x_fake, RngStream& rng) {
  if (!x_real.same_shape(x_fake))
    throw ShapeError("interpolate_pairs: batch shapes differ: " + shape_str(x_real.shape()) +
                     " vs " + shape_str(x_fake.shape()));
  std::vector<double> eps(x_real.rows());
  for (double& e : eps) e = rng.next_unit();
  return interpolate_with_eps(x_real, x_fake, std::move(eps));
}

}  // namespace gannoise::losses
