#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "gannoise/mlp.hpp"

using namespace gannoise;

namespace {

Tensor identity_matrix(std::size_t n) {
  Tensor m = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("init is deterministic per seed") {
  MlpSpec spec;
  spec.layer_widths = {2, 4, 1};
  RngStream r1(7, streams::kGeneratorInit);
  RngStream r2(7, streams::kGeneratorInit);
  Parameters a = init_mlp(spec, r1);
  Parameters b = init_mlp(spec, r2);
  REQUIRE(a.layers.size() == b.layers.size());
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (std::size_t i = 0; i < a.layers[l].weight.size(); ++i)
      CHECK(a.layers[l].weight[i] == b.layers[l].weight[i]);
    for (std::size_t i = 0; i < a.layers[l].bias.size(); ++i)
      CHECK(a.layers[l].bias[i] == 0.0);
  }
}

TEST_CASE("xavier bounds for a 4->4 layer") {
  MlpSpec spec;
  spec.layer_widths = {4, 4, 1};
  RngStream rng(3, 0);
  Parameters p = init_mlp(spec, rng);
  double bound = std::sqrt(6.0 / 8.0);
  for (std::size_t i = 0; i < p.layers[0].weight.size(); ++i) {
    CHECK(p.layers[0].weight[i] >= -bound);
    CHECK(p.layers[0].weight[i] <= bound);
  }
}

TEST_CASE("empirical weight variance matches the uniform law") {
  // Draw many weights of a fixed fan-in/fan-out and compare against
  // range^2/12 = (2a)^2/12 = a^2/3.
  MlpSpec spec;
  spec.layer_widths = {100, 100, 1};  // 10^4 weights per init
  RngStream rng(11, 0);
  double sum = 0.0, sumsq = 0.0;
  std::size_t n = 0;
  for (int rep = 0; rep < 10; ++rep) {
    Parameters p = init_mlp(spec, rng);
    for (double w : p.layers[0].weight.data()) {
      sum += w;
      sumsq += w * w;
      ++n;
    }
  }
  REQUIRE(n == 100000);
  double mean = sum / static_cast<double>(n);
  double var = sumsq / static_cast<double>(n) - mean * mean;
  double a = std::sqrt(6.0 / 200.0);
  CHECK(var == doctest::Approx(a * a / 3.0).epsilon(0.05));
}

TEST_CASE("zero parameters with sigmoid output give 0.5") {
  MlpSpec spec;
  spec.layer_widths = {3, 4, 2};
  spec.hidden_activation = Activation::relu;
  spec.output_activation = Activation::sigmoid;
  Parameters p;
  p.layers.push_back({Tensor::zeros({4, 3}), Tensor::zeros({1, 4})});
  p.layers.push_back({Tensor::zeros({2, 4}), Tensor::zeros({1, 2})});
  Tensor out = mlp_eval(p, spec, Tensor::matrix(2, 3, {5, -1, 0.3, 0, 2, -9}));
  REQUIRE(out.shape() == Shape{2, 2});
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.5);
}

TEST_CASE("identity weights and activations give the identity map") {
  MlpSpec spec;
  spec.layer_widths = {2, 2, 2};
  spec.hidden_activation = Activation::identity;
  spec.output_activation = Activation::identity;
  Parameters p;
  p.layers.push_back({identity_matrix(2), Tensor::zeros({1, 2})});
  p.layers.push_back({identity_matrix(2), Tensor::zeros({1, 2})});
  Tensor in = Tensor::matrix(3, 2, {0.5, -2.0, 3.25, 0.0, -1.5, 7.0});
  Tensor out = mlp_eval(p, spec, in);
  REQUIRE(out.same_shape(in));
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(out[i] == in[i]);
}

TEST_CASE("random [3,5,5,1] network matches a hand-rolled oracle") {
  MlpSpec spec;
  spec.layer_widths = {3, 5, 5, 1};
  spec.hidden_activation = Activation::tanh_act;
  spec.output_activation = Activation::identity;
  RngStream rng(21, 0);
  Parameters p = init_mlp(spec, rng);
  Tensor x = rng.normal_tensor({4, 3});

  Tensor got = mlp_eval(p, spec, x);

  // independent oracle: plain nested loops, no tape, no GEMM kernel
  auto layer_oracle = [](const std::vector<double>& in, const Layer& l, bool tanh_act) {
    std::size_t out_w = l.weight.rows(), in_w = l.weight.cols();
    std::vector<double> out(out_w);
    for (std::size_t o = 0; o < out_w; ++o) {
      double acc = l.bias[o];
      for (std::size_t i = 0; i < in_w; ++i) acc += l.weight.at(o, i) * in[i];
      out[o] = tanh_act ? std::tanh(acc) : acc;
    }
    return out;
  };
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::vector<double> row(3);
    for (std::size_t c = 0; c < 3; ++c) row[c] = x.at(r, c);
    std::vector<double> h1 = layer_oracle(row, p.layers[0], true);
    std::vector<double> h2 = layer_oracle(h1, p.layers[1], true);
    std::vector<double> y = layer_oracle(h2, p.layers[2], false);
    CHECK(std::abs(got.at(r, 0) - y[0]) < 1e-12);
  }
}

TEST_CASE("forward is deterministic and batch-axis independent") {
  MlpSpec spec = synthetic_discriminator_spec(false);
  RngStream rng(5, streams::kDiscriminatorInit);
  Parameters p = init_mlp(spec, rng);
  Tensor batch = Tensor::matrix(2, 1, {0.25, -1.75});

  Tensor out1 = mlp_eval(p, spec, batch);
  Tensor out2 = mlp_eval(p, spec, batch);
  for (std::size_t i = 0; i < out1.size(); ++i) CHECK(out1[i] == out2[i]);

  // Single-row products take a different (GEMV) kernel path than batched
  // ones, so rows agree to rounding, not bit-exactly.
  Tensor row0 = mlp_eval(p, spec, Tensor::matrix(1, 1, {0.25}));
  Tensor row1 = mlp_eval(p, spec, Tensor::matrix(1, 1, {-1.75}));
  CHECK(out1.at(0, 0) == doctest::Approx(row0.at(0, 0)).epsilon(1e-12));
  CHECK(out1.at(1, 0) == doctest::Approx(row1.at(0, 0)).epsilon(1e-12));
}

TEST_CASE("sigmoid discriminator output lies in (0,1)") {
  MlpSpec spec = mnist_discriminator_spec(false);
  RngStream rng(13, streams::kDiscriminatorInit);
  Parameters p = init_mlp(spec, rng);
  Tensor x = rng.uniform_tensor({8, 784}, -1.0, 1.0);
  Tensor out = mlp_eval(p, spec, x);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i] > 0.0);
    CHECK(out[i] < 1.0);
  }
}

TEST_CASE("input width mismatch raises a shape error") {
  MlpSpec spec = synthetic_generator_spec(4);
  RngStream rng(1, 0);
  Parameters p = init_mlp(spec, rng);
  CHECK_THROWS_AS(mlp_eval(p, spec, Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6})), ShapeError);
}

TEST_CASE("spec validation") {
  MlpSpec no_hidden;
  no_hidden.layer_widths = {3, 1};
  CHECK_THROWS_AS(no_hidden.validate(), ContractError);
  MlpSpec zero_width;
  zero_width.layer_widths = {3, 0, 1};
  CHECK_THROWS_AS(zero_width.validate(), ContractError);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  MlpSpec spec = synthetic_generator_spec(6);
  RngStream rng(77, 0);
  Parameters p = init_mlp(spec, rng);
  // make biases non-trivial so the round-trip covers them
  for (Layer& l : p.layers)
    for (double& b : l.bias.data()) b = rng.normal();

  auto path = temp_file("gnwt_roundtrip.bin");
  save_checkpoint(p, path);
  Parameters q = load_checkpoint(path, Role::generator);
  REQUIRE(q.layers.size() == p.layers.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    REQUIRE(q.layers[l].weight.same_shape(p.layers[l].weight));
    REQUIRE(q.layers[l].bias.same_shape(p.layers[l].bias));
    for (std::size_t i = 0; i < p.layers[l].weight.size(); ++i)
      CHECK(q.layers[l].weight[i] == p.layers[l].weight[i]);
    for (std::size_t i = 0; i < p.layers[l].bias.size(); ++i)
      CHECK(q.layers[l].bias[i] == p.layers[l].bias[i]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("handcrafted checkpoint bytes parse to known values") {
  // One layer, 1x2 weight [1.5, -2.5], bias [0.75].
  auto path = temp_file("gnwt_handmade.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out.write("GNWT", 4);
    std::uint32_t version = 1, layers = 1, rows = 1, cols = 2;
    out.write(reinterpret_cast<char*>(&version), 4);
    out.write(reinterpret_cast<char*>(&layers), 4);
    out.write(reinterpret_cast<char*>(&rows), 4);
    out.write(reinterpret_cast<char*>(&cols), 4);
    double w0 = 1.5, w1 = -2.5, b0 = 0.75;
    out.write(reinterpret_cast<char*>(&w0), 8);
    out.write(reinterpret_cast<char*>(&w1), 8);
    out.write(reinterpret_cast<char*>(&b0), 8);
  }
  Parameters p = load_checkpoint(path);
  REQUIRE(p.layers.size() == 1);
  CHECK(p.layers[0].weight.shape() == Shape{1, 2});
  CHECK(p.layers[0].weight[0] == 1.5);
  CHECK(p.layers[0].weight[1] == -2.5);
  CHECK(p.layers[0].bias[0] == 0.75);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint error surface") {
  auto bad_magic = temp_file("gnwt_badmagic.bin");
  {
    std::ofstream out(bad_magic, std::ios::binary);
    out.write("NOPE", 4);
  }
  CHECK_THROWS_AS(load_checkpoint(bad_magic), FormatError);
  std::filesystem::remove(bad_magic);

  auto truncated = temp_file("gnwt_trunc.bin");
  {
    std::ofstream out(truncated, std::ios::binary);
    out.write("GNWT", 4);
    std::uint32_t version = 1, layers = 1, rows = 2, cols = 2;
    out.write(reinterpret_cast<char*>(&version), 4);
    out.write(reinterpret_cast<char*>(&layers), 4);
    out.write(reinterpret_cast<char*>(&rows), 4);
    out.write(reinterpret_cast<char*>(&cols), 4);
    double only_one = 3.14;
    out.write(reinterpret_cast<char*>(&only_one), 8);
  }
  CHECK_THROWS_AS(load_checkpoint(truncated), FormatError);
  std::filesystem::remove(truncated);
}
