#include "gannoise/metrics.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "gannoise/optim.hpp"
#include "gannoise/rng.hpp"

namespace gannoise::metrics {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(const Tensor& t) {
  if (t.rank() != 2) throw ShapeError("expected a rank-2 tensor, got " + shape_str(t.shape()));
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

Tensor from_matrix(const RowMat& m) {
  Tensor out = Tensor::zeros({static_cast<std::size_t>(m.rows()),
                              static_cast<std::size_t>(m.cols())});
  MutMap(out.data().data(), m.rows(), m.cols()) = m;
  return out;
}

void require_square_symmetric(const Tensor& a, const char* what) {
  if (a.rank() != 2 || a.rows() != a.cols())
    throw ShapeError(std::string(what) + " needs a square matrix, got " + shape_str(a.shape()));
  if (!a.all_finite()) throw DomainError(std::string(what) + " got non-finite entries");
  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::abs(v));
  const std::size_t d = a.rows();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (std::abs(a.at(i, j) - a.at(j, i)) > 1e-9 * (1.0 + scale))
        throw ContractError(std::string(what) + " needs a symmetric matrix; entry (" +
                            std::to_string(i) + "," + std::to_string(j) + ") differs from its " +
                            "mirror by " + std::to_string(std::abs(a.at(i, j) - a.at(j, i))));
}

}  // namespace

GaussianStats empirical_gaussian_stats(const Tensor& samples) {
  if (samples.rank() != 2)
    throw ShapeError("stats need an n x d sample matrix, got " + shape_str(samples.shape()));
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  if (n < 2)
    throw ContractError("covariance needs at least 2 samples, got " + std::to_string(n));
  if (!samples.all_finite()) throw DomainError("sample matrix holds non-finite values");

  ConstMap x = as_matrix(samples);
  RowMat mu = x.colwise().mean();                      // 1 x d
  RowMat centered = x.rowwise() - mu.row(0);           // n x d
  RowMat sigma = (centered.transpose() * centered) / static_cast<double>(n - 1);
  sigma = 0.5 * (sigma + sigma.transpose()).eval();    // exact symmetry despite round-off

  GaussianStats s;
  s.mu = from_matrix(mu);
  s.sigma = from_matrix(sigma);
  (void)d;
  return s;
}

SymEig jacobi_eigensym(const Tensor& a) {
  require_square_symmetric(a, "eigendecomposition");
  const std::size_t d = a.rows();

  RowMat b = as_matrix(a);
  b = (0.5 * (b + b.transpose())).eval();
  RowMat v = RowMat::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));

  const double frob = std::max(b.norm(), 1e-300);
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) off += 2.0 * b(p, q) * b(p, q);
    if (std::sqrt(off) <= 1e-14 * frob) break;

    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = b(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (b(q, q) - b(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double bpp = b(p, p), bqq = b(q, q);
        for (std::size_t k = 0; k < d; ++k) {
          if (k == p || k == q) continue;
          const double bkp = b(k, p), bkq = b(k, q);
          b(k, p) = b(p, k) = c * bkp - s * bkq;
          b(k, q) = b(q, k) = s * bkp + c * bkq;
        }
        b(p, p) = c * c * bpp - 2.0 * s * c * apq + s * s * bqq;
        b(q, q) = s * s * bpp + 2.0 * s * c * apq + c * c * bqq;
        b(p, q) = b(q, p) = 0.0;

        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  double off = 0.0;
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t q = p + 1; q < d; ++q) off += 2.0 * b(p, q) * b(p, q);
  if (std::sqrt(off) > 1e-8 * frob)
    throw ContractError("jacobi eigendecomposition failed to converge");

  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return b(i, i) < b(j, j); });

  SymEig eig;
  eig.values.resize(d);
  RowMat sorted_v(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    eig.values[i] = b(order[i], order[i]);
    sorted_v.col(static_cast<Eigen::Index>(i)) = v.col(static_cast<Eigen::Index>(order[i]));
  }
  eig.vectors = from_matrix(sorted_v);
  return eig;
}

Tensor psd_sqrt(const Tensor& a) {
  require_square_symmetric(a, "psd_sqrt");
  const std::size_t d = a.rows();
  SymEig eig = jacobi_eigensym(a);

  RowMat v = as_matrix(eig.vectors);
  RowMat root_scaled = v;
  RowMat clamped_scaled = v;
  for (std::size_t i = 0; i < d; ++i) {
    double lam = eig.values[i];
    if (lam < -1e-6)
      throw NotPsdError("matrix has eigenvalue " + std::to_string(lam) +
                        " below the -1e-6 PSD tolerance");
    if (lam < 0.0) lam = 0.0;
    root_scaled.col(static_cast<Eigen::Index>(i)) *= std::sqrt(lam);
    clamped_scaled.col(static_cast<Eigen::Index>(i)) *= lam;
  }
  RowMat s = root_scaled * v.transpose();
  s = (0.5 * (s + s.transpose())).eval();

  // The residual is judged against the PSD projection of the input, so that
  // clamping in-tolerance negative eigenvalues does not trip the check.
  RowMat projected = clamped_scaled * v.transpose();
  const double residual = (s * s - projected).norm();
  if (residual > 1e-8 * (1.0 + projected.norm()))
    throw ContractError("psd_sqrt reconstruction residual " + std::to_string(residual) +
                        " exceeds tolerance");
  return from_matrix(s);
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mu.rank() != 2 || b.mu.rank() != 2 || a.mu.rows() != 1 || b.mu.rows() != 1)
    throw ShapeError("stats mean must be 1 x d");
  const std::size_t d = a.mu.cols();
  if (b.mu.cols() != d || a.sigma.rows() != d || a.sigma.cols() != d || b.sigma.rows() != d ||
      b.sigma.cols() != d)
    throw ShapeError("frechet distance needs matching dimensions, got d_a=" +
                     std::to_string(d) + " d_b=" + std::to_string(b.mu.cols()));

  double mean_term = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = a.mu.at(0, j) - b.mu.at(0, j);
    mean_term += diff * diff;
  }

  Tensor root_a = psd_sqrt(a.sigma);
  RowMat ra = as_matrix(root_a);
  RowMat inner = ra * as_matrix(b.sigma) * ra;
  inner = (0.5 * (inner + inner.transpose())).eval();
  Tensor cross = psd_sqrt(from_matrix(inner));

  double trace_term = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    trace_term += a.sigma.at(i, i) + b.sigma.at(i, i) - 2.0 * cross.at(i, i);

  return std::max(mean_term + trace_term, 0.0);
}

double frechet_distance(const Tensor& samples_a, const Tensor& samples_b) {
  return frechet_distance(empirical_gaussian_stats(samples_a),
                          empirical_gaussian_stats(samples_b));
}

std::vector<double> flatten_samples(const Tensor& t) { return t.data(); }

HistGrid default_hist_grid(const std::vector<double>& samples_p,
                           const std::vector<double>& samples_q) {
  if (samples_p.empty() || samples_q.empty())
    throw ContractError("histogram grid needs non-empty sample sets");
  double lo = samples_p[0], hi = samples_p[0];
  double sum = 0.0, sum_sq = 0.0;
  const auto absorb = [&](const std::vector<double>& v) {
    for (double x : v) {
      if (!std::isfinite(x)) throw DomainError("histogram sample is non-finite");
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      sum += x;
      sum_sq += x * x;
    }
  };
  absorb(samples_p);
  absorb(samples_q);
  const double n = static_cast<double>(samples_p.size() + samples_q.size());
  const double var = std::max(sum_sq / n - (sum / n) * (sum / n), 0.0);
  double pad = 3.0 * std::sqrt(var);
  if (pad <= 0.0) pad = 1.0;  // all samples equal: keep lo < hi
  return HistGrid{lo - pad, hi + pad};
}

double jsd_histogram(const std::vector<double>& samples_p, const std::vector<double>& samples_q,
                     std::size_t bins, double lo, double hi) {
  if (bins < 2) throw ContractError("jsd needs at least 2 bins, got " + std::to_string(bins));
  if (!(lo < hi))
    throw ContractError("jsd grid needs lo < hi, got [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + ")");
  if (samples_p.empty() || samples_q.empty())
    throw ContractError("jsd needs non-empty sample sets");

  const double width = (hi - lo) / static_cast<double>(bins);
  const auto histogram = [&](const std::vector<double>& v) {
    std::vector<double> counts(bins, 0.0);
    for (double x : v) {
      if (!std::isfinite(x)) throw DomainError("jsd sample is non-finite");
      auto idx = static_cast<long long>(std::floor((x - lo) / width));
      idx = std::clamp(idx, 0LL, static_cast<long long>(bins) - 1);  // edge bins absorb overflow
      counts[static_cast<std::size_t>(idx)] += 1.0;
    }
    const double denom = static_cast<double>(v.size()) + static_cast<double>(bins) * 1e-12;
    for (double& c : counts) c = (c + 1e-12) / denom;
    return counts;
  };

  const std::vector<double> p = histogram(samples_p);
  const std::vector<double> q = histogram(samples_q);
  // Entropy form of the divergence, accumulated separately per argument and
  // combined through commutative operations only: the result is exactly
  // symmetric in (p, q) even under compiler FMA contraction.
  double hp = 0.0, hq = 0.0, hm = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    hp += p[i] * std::log(p[i]);
    hq += q[i] * std::log(q[i]);
    hm += m * std::log(m);
  }
  const double jsd = 0.5 * (hp + hq) - hm;
  return std::clamp(jsd, 0.0, std::log(2.0));
}

double jsd_histogram_auto(const std::vector<double>& samples_p,
                          const std::vector<double>& samples_q) {
  const HistGrid grid = default_hist_grid(samples_p, samples_q);
  return jsd_histogram(samples_p, samples_q, 200, grid.lo, grid.hi);
}

// ---------------------------------------------------------------------------
// Embedder

MlpSpec embedder_spec() {
  MlpSpec s;
  s.layer_widths = {784, 256, kEmbedderFeatureDim, kEmbedderClasses};
  s.hidden_activation = Activation::relu;
  s.output_activation = Activation::identity;
  return s;
}

namespace {

struct EmbedderForward {
  RowMat h1;      // n x 256, post-relu
  RowMat h2;      // n x 64, post-relu
  RowMat logits;  // n x 10
};

void check_images(const Tensor& images, const char* what) {
  if (images.rank() != 2 || images.cols() != 784)
    throw ShapeError(std::string(what) + " needs n x 784 images, got " +
                     shape_str(images.shape()));
  if (!images.all_finite()) throw DomainError(std::string(what) + " got non-finite pixels");
}

EmbedderForward embedder_forward(const Parameters& params, ConstMap x) {
  ConstMap w1 = as_matrix(params.layers[0].weight);
  ConstMap b1 = as_matrix(params.layers[0].bias);
  ConstMap w2 = as_matrix(params.layers[1].weight);
  ConstMap b2 = as_matrix(params.layers[1].bias);
  ConstMap w3 = as_matrix(params.layers[2].weight);
  ConstMap b3 = as_matrix(params.layers[2].bias);

  EmbedderForward f;
  f.h1 = ((x * w1.transpose()).rowwise() + b1.row(0)).cwiseMax(0.0);
  f.h2 = ((f.h1 * w2.transpose()).rowwise() + b2.row(0)).cwiseMax(0.0);
  f.logits = (f.h2 * w3.transpose()).rowwise() + b3.row(0);
  return f;
}

RowMat softmax_rows(const RowMat& logits) {
  RowMat shifted = logits.colwise() - logits.rowwise().maxCoeff();
  RowMat expd = shifted.array().exp().matrix();
  Eigen::VectorXd sums = expd.rowwise().sum();
  return expd.array().colwise() / sums.array();
}

void check_embedder_arch(const Parameters& params, const char* what) {
  const MlpSpec spec = embedder_spec();
  if (params.layers.size() != spec.layer_count())
    throw FormatError(std::string(what) + ": expected " + std::to_string(spec.layer_count()) +
                      " layers, got " + std::to_string(params.layers.size()));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const Layer& layer = params.layers[l];
    if (layer.weight.rows() != spec.layer_widths[l + 1] ||
        layer.weight.cols() != spec.layer_widths[l])
      throw FormatError(std::string(what) + ": layer " + std::to_string(l) + " is " +
                        shape_str(layer.weight.shape()) + ", expected [" +
                        std::to_string(spec.layer_widths[l + 1]) + ", " +
                        std::to_string(spec.layer_widths[l]) + "]");
  }
}

}  // namespace

Embedder train_embedder(const MnistData& data, std::uint64_t seed, const EmbedderBudget& budget) {
  if (budget.batch < 1) throw ContractError("embedder batch size must be >= 1");
  if (!(budget.lr > 0.0)) throw ContractError("embedder learning rate must be positive");
  if (budget.min_accuracy < 0.0 || budget.min_accuracy > 1.0)
    throw ContractError("embedder accuracy floor must lie in [0, 1]");
  check_images(data.train.images, "embedder training");
  check_images(data.test.images, "embedder evaluation");
  if (data.train.size() == 0) throw ContractError("embedder training split is empty");

  const MlpSpec spec = embedder_spec();
  RngStream init_rng(seed, streams::kGeneratorInit);
  Parameters params = init_mlp(spec, init_rng);
  RngStream batch_rng(seed, streams::kBatchIndex);

  OptimizerConfig oc;
  oc.kind = OptKind::adam;
  oc.lr = budget.lr;
  oc.beta1 = 0.9;
  oc.beta2 = 0.999;
  Optimizer opt(oc, params);

  ConstMap x_all = as_matrix(data.train.images);
  const std::size_t n = data.train.size();
  const std::size_t b = budget.batch;
  const std::size_t third1 = budget.steps / 3;
  const std::size_t third2 = (2 * budget.steps) / 3;
  double lr = budget.lr;

  RowMat xb(static_cast<Eigen::Index>(b), 784);
  RowMat onehot(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(kEmbedderClasses));

  for (std::size_t step = 0; step < budget.steps; ++step) {
    if (budget.steps >= 3 && (step == third1 || step == third2)) {
      lr *= 0.3;
      opt.set_lr(lr);
    }

    onehot.setZero();
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t idx = static_cast<std::size_t>(batch_rng.next_u64() % n);
      xb.row(static_cast<Eigen::Index>(i)) = x_all.row(static_cast<Eigen::Index>(idx));
      onehot(static_cast<Eigen::Index>(i), data.train.labels[idx]) = 1.0;
    }

    EmbedderForward f = embedder_forward(params, ConstMap(xb.data(), xb.rows(), xb.cols()));
    RowMat probs = softmax_rows(f.logits);
    RowMat dlogits = (probs - onehot) / static_cast<double>(b);

    ConstMap w2 = as_matrix(params.layers[1].weight);
    ConstMap w3 = as_matrix(params.layers[2].weight);
    RowMat dw3 = dlogits.transpose() * f.h2;
    RowMat db3 = dlogits.colwise().sum();
    RowMat dh2 = (dlogits * w3).cwiseProduct((f.h2.array() > 0.0).cast<double>().matrix());
    RowMat dw2 = dh2.transpose() * f.h1;
    RowMat db2 = dh2.colwise().sum();
    RowMat dh1 = (dh2 * w2).cwiseProduct((f.h1.array() > 0.0).cast<double>().matrix());
    RowMat dw1 = dh1.transpose() * xb;
    RowMat db1 = dh1.colwise().sum();

    const std::vector<Tensor> grads = {from_matrix(dw1), from_matrix(db1), from_matrix(dw2),
                                       from_matrix(db2), from_matrix(dw3), from_matrix(db3)};
    opt.step(params, grads);
  }

  Embedder e;
  e.params = std::move(params);
  e.test_accuracy = classifier_accuracy(e, data.test);
  if (e.test_accuracy < budget.min_accuracy)
    throw EmbedderQualityError("embedder test accuracy " + std::to_string(e.test_accuracy) +
                               " is below the required " + std::to_string(budget.min_accuracy) +
                               " after " + std::to_string(budget.steps) + " steps");
  return e;
}

Tensor embed(const Embedder& e, const Tensor& images) {
  check_images(images, "embed");
  check_embedder_arch(e.params, "embed");
  EmbedderForward f = embedder_forward(e.params, as_matrix(images));
  return from_matrix(f.h2);
}

Tensor predict_softmax(const Embedder& e, const Tensor& images) {
  check_images(images, "predict");
  check_embedder_arch(e.params, "predict");
  EmbedderForward f = embedder_forward(e.params, as_matrix(images));
  return from_matrix(softmax_rows(f.logits));
}

double classifier_accuracy(const Embedder& e, const ImageDataset& split) {
  check_images(split.images, "accuracy");
  check_embedder_arch(e.params, "accuracy");
  if (split.size() == 0) throw ContractError("accuracy needs a non-empty split");
  EmbedderForward f = embedder_forward(e.params, as_matrix(split.images));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < split.size(); ++i) {
    Eigen::Index best = 0;
    f.logits.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    if (static_cast<int>(best) == split.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(split.size());
}

void save_embedder(const Embedder& e, const std::filesystem::path& path) {
  check_embedder_arch(e.params, "save_embedder");
  save_checkpoint(e.params, path, "GNEM");
}

Embedder load_embedder(const std::filesystem::path& path) {
  Embedder e;
  e.params = load_checkpoint(path, Role::generator, "GNEM");
  check_embedder_arch(e.params, "load_embedder");
  e.test_accuracy = -1.0;
  return e;
}

double fid(const Embedder& e, const Tensor& real_images, const Tensor& fake_images) {
  return frechet_distance(embed(e, real_images), embed(e, fake_images));
}

IsResult inception_score_from_probs(const Tensor& probs, std::size_t splits) {
  if (probs.rank() != 2 || probs.cols() < 2)
    throw ShapeError("inception score needs an n x K posterior matrix with K >= 2, got " +
                     shape_str(probs.shape()));
  const std::size_t n = probs.rows();
  const std::size_t k = probs.cols();
  if (splits < 1) throw ContractError("inception score needs at least one split");
  if (splits > n)
    throw ContractError("inception score got " + std::to_string(splits) + " splits for " +
                        std::to_string(n) + " samples");
  if (n % splits != 0)
    throw ContractError("batch size " + std::to_string(n) + " is not divisible into " +
                        std::to_string(splits) + " splits");
  const std::size_t group = n / splits;
  if (group < 2)
    throw ContractError("inception score splits need at least 2 samples each, got " +
                        std::to_string(group));
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double p = probs.at(i, j);
      if (!std::isfinite(p) || p < 0.0)
        throw DomainError("posterior row " + std::to_string(i) + " holds invalid entries");
      row_sum += p;
    }
    if (std::abs(row_sum - 1.0) > 1e-9)
      throw DomainError("posterior row " + std::to_string(i) + " sums to " +
                        std::to_string(row_sum) + ", expected 1");
  }

  std::vector<double> scores(splits, 0.0);
  for (std::size_t s = 0; s < splits; ++s) {
    std::vector<double> marginal(k, 0.0);
    for (std::size_t i = s * group; i < (s + 1) * group; ++i)
      for (std::size_t j = 0; j < k; ++j) marginal[j] += probs.at(i, j);
    for (double& m : marginal) m /= static_cast<double>(group);

    double mean_kl = 0.0;
    for (std::size_t i = s * group; i < (s + 1) * group; ++i) {
      double kl = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double p = probs.at(i, j);
        if (p > 0.0) kl += p * std::log(p / marginal[j]);
      }
      mean_kl += kl;
    }
    mean_kl /= static_cast<double>(group);
    scores[s] = std::clamp(std::exp(mean_kl), 1.0, static_cast<double>(k));
  }

  IsResult r;
  for (double s : scores) r.mean += s;
  r.mean /= static_cast<double>(splits);
  for (double s : scores) r.variance += (s - r.mean) * (s - r.mean);
  r.variance /= static_cast<double>(splits);
  return r;
}

IsResult inception_score(const Embedder& e, const Tensor& fake_images, std::size_t splits) {
  return inception_score_from_probs(predict_softmax(e, fake_images), splits);
}

}  // namespace gannoise::metrics
