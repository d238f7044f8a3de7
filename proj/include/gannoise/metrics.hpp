#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "gannoise/data.hpp"
#include "gannoise/mlp.hpp"
#include "gannoise/tensor.hpp"

namespace gannoise::metrics {

/// Moment summary of a sample batch: mean vector and covariance matrix.
struct GaussianStats {
  Tensor mu;     // 1 x d
  Tensor sigma;  // d x d, symmetric
};

/// Column means and unbiased (n-1) covariance of an n x d sample matrix.
/// Throws ContractError for fewer than two samples.
GaussianStats empirical_gaussian_stats(const Tensor& samples);

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
struct SymEig {
  std::vector<double> values;  // ascending
  Tensor vectors;              // d x d, column i pairs with values[i]
};
SymEig jacobi_eigensym(const Tensor& a);

/// Symmetric PSD square root S with S*S ~= A (Frobenius residual bounded by
/// 1e-8 * (1 + ||A||_F)). Eigenvalues below -1e-6 raise NotPsdError; small
/// negatives in [-1e-6, 0) are clamped to zero.
Tensor psd_sqrt(const Tensor& a);

/// Frechet distance between two Gaussians:
///   ||mu_a - mu_b||^2 + Tr(Sigma_a + Sigma_b - 2 (Sigma_a^1/2 Sigma_b Sigma_a^1/2)^1/2).
/// Nonnegative by construction; tiny negative round-off is clamped to zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);
double frechet_distance(const Tensor& samples_a, const Tensor& samples_b);

/// Jensen-Shannon divergence between two scalar sample sets, estimated on a
/// shared histogram grid: `bins` equal-width cells over [lo, hi), samples
/// outside the range counted into the edge bins, additive smoothing 1e-12,
/// natural log. Result lies in [0, ln 2].
double jsd_histogram(const std::vector<double>& samples_p, const std::vector<double>& samples_q,
                     std::size_t bins, double lo, double hi);

/// jsd_histogram on the default grid (below) with 200 bins.
double jsd_histogram_auto(const std::vector<double>& samples_p,
                          const std::vector<double>& samples_q);

/// Default grid for jsd_histogram: the pooled data range widened by three
/// pooled standard deviations on each side.
struct HistGrid {
  double lo = 0.0;
  double hi = 0.0;
};
HistGrid default_hist_grid(const std::vector<double>& samples_p,
                           const std::vector<double>& samples_q);

/// Flattens any tensor into a scalar sample list (for 1-D synthetic batches).
std::vector<double> flatten_samples(const Tensor& t);

// ---------------------------------------------------------------------------
// Surrogate embedder: a small MNIST classifier whose penultimate activations
// give the feature space for FID and whose class posteriors feed IS. Scores
// are comparable across runs of this project, not against other codebases.

inline constexpr std::size_t kEmbedderFeatureDim = 64;
inline constexpr std::size_t kEmbedderClasses = 10;
inline constexpr std::uint64_t kEmbedderDefaultSeed = 1234;

MlpSpec embedder_spec();  // [784, 256, 64, 10], relu hidden, identity head

struct EmbedderBudget {
  std::size_t steps = 10000;
  std::size_t batch = 64;
  double lr = 1e-3;          // decayed by 0.3x at each third of the run
  double min_accuracy = 0.90;  // below this after the budget -> EmbedderQualityError
};

struct Embedder {
  Parameters params;
  double test_accuracy = -1.0;  // -1 when loaded from a checkpoint
};

/// Trains the classifier on the train split and scores it on the test split.
/// Deterministic in (data, seed, budget). Throws EmbedderQualityError when
/// test accuracy ends below budget.min_accuracy.
Embedder train_embedder(const MnistData& data, std::uint64_t seed = kEmbedderDefaultSeed,
                        const EmbedderBudget& budget = {});

/// Penultimate-layer activations, n x 64.
Tensor embed(const Embedder& e, const Tensor& images);

/// Class posteriors p(y|x), n x 10; every row sums to one.
Tensor predict_softmax(const Embedder& e, const Tensor& images);

/// Fraction of images whose argmax posterior matches the label.
double classifier_accuracy(const Embedder& e, const ImageDataset& split);

/// Checkpoint in the shared binary container under magic "GNEM".
void save_embedder(const Embedder& e, const std::filesystem::path& path);
Embedder load_embedder(const std::filesystem::path& path);

/// Frechet distance between embedded real and generated image batches.
double fid(const Embedder& e, const Tensor& real_images, const Tensor& fake_images);

/// Inception-style score: mean and population variance over `splits` equal
/// groups of exp(E[KL(p(y|x) || p_bar_split)]). Each split score lies in
/// [1, class count].
struct IsResult {
  double mean = 0.0;
  double variance = 0.0;
};
IsResult inception_score(const Embedder& e, const Tensor& fake_images, std::size_t splits = 10);

/// Same computation on precomputed posterior rows (n x K); the embedder
/// wrapper reduces to this.
IsResult inception_score_from_probs(const Tensor& probs, std::size_t splits = 10);

}  // namespace gannoise::metrics
