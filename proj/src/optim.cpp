#include "gannoise/optim.hpp"

#include <cmath>
#include <string>

namespace gannoise {

void OptimizerConfig::validate() const {
  if (lr <= 0.0) throw ContractError("optimizer lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0) throw ContractError("beta1 must lie in [0,1)");
  if (beta2 < 0.0 || beta2 >= 1.0) throw ContractError("beta2 must lie in [0,1)");
  if (eps <= 0.0) throw ContractError("optimizer eps must be positive");
}

OptimizerConfig gan_default_optimizer() {
  return {OptKind::adam, 2e-4, 0.5, 0.999, 1e-8};
}

OptimizerConfig wgan_default_optimizer() {
  return {OptKind::adam, 1e-4, 0.0, 0.9, 1e-8};
}

std::vector<Tensor*> param_tensors(Parameters& params) {
  std::vector<Tensor*> out;
  out.reserve(params.layers.size() * 2);
  for (Layer& l : params.layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<Tensor> collect_grads(const ad::GradientMap& grads, const TapedParams& staged,
                                  const Parameters& params) {
  if (staged.weights.size() != params.layers.size())
    throw ContractError("staged parameters do not match the parameter set");
  std::vector<Tensor> out;
  out.reserve(params.layers.size() * 2);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto wit = grads.find(staged.weights[l]);
    out.push_back(wit != grads.end() ? wit->second
                                     : Tensor::zeros(params.layers[l].weight.shape()));
    auto bit = grads.find(staged.biases[l]);
    out.push_back(bit != grads.end() ? bit->second
                                     : Tensor::zeros(params.layers[l].bias.shape()));
  }
  return out;
}

Optimizer::Optimizer(OptimizerConfig cfg, const Parameters& shape_source) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.kind == OptKind::adam) {
    for (const Layer& l : shape_source.layers) {
      m_.push_back(Tensor::zeros(l.weight.shape()));
      m_.push_back(Tensor::zeros(l.bias.shape()));
      v_.push_back(Tensor::zeros(l.weight.shape()));
      v_.push_back(Tensor::zeros(l.bias.shape()));
    }
  }
}

void Optimizer::set_lr(double lr) {
  if (!(lr > 0.0)) throw ContractError("learning rate must be positive");
  cfg_.lr = lr;
}

void Optimizer::step(Parameters& params, const std::vector<Tensor>& grads) {
  std::vector<Tensor*> targets = param_tensors(params);
  if (grads.size() != targets.size())
    throw ContractError("optimizer got " + std::to_string(grads.size()) + " gradients for " +
                        std::to_string(targets.size()) + " parameter tensors");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].same_shape(*targets[i]))
      throw ShapeError("gradient " + std::to_string(i) + " shape " +
                       shape_str(grads[i].shape()) + " does not match parameter shape " +
                       shape_str(targets[i]->shape()));
    if (!grads[i].all_finite())
      throw DomainError("non-finite gradient in parameter tensor " + std::to_string(i) +
                        " (layer " + std::to_string(i / 2) +
                        (i % 2 == 0 ? " weights)" : " biases)"));
  }

  ++t_;
  if (cfg_.kind == OptKind::sgd) {
    for (std::size_t i = 0; i < grads.size(); ++i)
      for (std::size_t j = 0; j < grads[i].size(); ++j)
        (*targets[i])[j] -= cfg_.lr * grads[i][j];
    return;
  }

  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (std::size_t j = 0; j < grads[i].size(); ++j) {
      double g = grads[i][j];
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
      double m_hat = m_[i][j] / bc1;
      double v_hat = v_[i][j] / bc2;
      (*targets[i])[j] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace gannoise
