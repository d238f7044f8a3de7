#include "gannoise/mlp.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace gannoise {

namespace {

constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& in, const char* what) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw FormatError(std::string("checkpoint truncated while reading ") + what);
  return v;
}

void write_f64s(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_f64s(std::ifstream& in, std::vector<double>& v, const char* what) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!in)
    throw FormatError("checkpoint truncated while reading " + std::string(what) + ": expected " +
                      std::to_string(v.size() * sizeof(double)) + " bytes, got " +
                      std::to_string(in.gcount()));
}

}  // namespace

void MlpSpec::validate() const {
  if (layer_widths.size() < 3)
    throw ContractError("mlp needs at least one hidden layer, got " +
                        std::to_string(layer_widths.size()) + " widths");
  for (std::size_t w : layer_widths)
    if (w < 1) throw ContractError("mlp layer widths must be >= 1");
}

std::size_t Parameters::scalar_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

Parameters init_mlp(const MlpSpec& spec, RngStream& rng) {
  spec.validate();
  Parameters p;
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    std::size_t fan_in = spec.layer_widths[l];
    std::size_t fan_out = spec.layer_widths[l + 1];
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Layer layer;
    layer.weight = rng.uniform_tensor({fan_out, fan_in}, -bound, bound);
    layer.bias = Tensor::zeros({1, fan_out});
    p.layers.push_back(std::move(layer));
  }
  return p;
}

TapedParams stage_params(ad::Tape& tape, const Parameters& params) {
  TapedParams staged;
  for (const Layer& l : params.layers) {
    staged.weights.push_back(tape.leaf(l.weight));
    staged.biases.push_back(tape.leaf(l.bias));
  }
  return staged;
}

TapedParams stage_params_frozen(ad::Tape& tape, const Parameters& params) {
  TapedParams staged;
  for (const Layer& l : params.layers) {
    staged.weights.push_back(tape.constant(l.weight));
    staged.biases.push_back(tape.constant(l.bias));
  }
  return staged;
}

ad::NodeId apply_activation(ad::Tape& tape, ad::NodeId x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return tape.relu(x);
    case Activation::leaky_relu: return tape.leaky_relu(x, 0.2);
    case Activation::tanh_act: return tape.tanh_fn(x);
    case Activation::sigmoid: return tape.sigmoid(x);
  }
  throw ContractError("unhandled activation");
}

ad::NodeId mlp_forward(ad::Tape& tape, const TapedParams& staged, const MlpSpec& spec,
                       ad::NodeId input) {
  spec.validate();
  if (staged.weights.size() != spec.layer_count() || staged.biases.size() != spec.layer_count())
    throw ContractError("staged parameter count does not match spec");
  const Tensor& in_value = tape.value(input);
  if (in_value.rank() != 2 || in_value.cols() != spec.input_width())
    throw ShapeError("mlp input must be batch x " + std::to_string(spec.input_width()) +
                     ", got " + shape_str(in_value.shape()));

  std::size_t batch = in_value.rows();
  ad::NodeId ones = tape.constant(Tensor::full({batch, 1}, 1.0));
  ad::NodeId h = input;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    ad::NodeId pre = tape.add(tape.matmul(h, tape.transpose(staged.weights[l])),
                              tape.matmul(ones, staged.biases[l]));
    bool last = (l + 1 == spec.layer_count());
    h = apply_activation(tape, pre, last ? spec.output_activation : spec.hidden_activation);
  }
  return h;
}

Tensor mlp_eval(const Parameters& params, const MlpSpec& spec, const Tensor& input) {
  ad::Tape tape;
  TapedParams staged = stage_params(tape, params);
  ad::NodeId out = mlp_forward(tape, staged, spec, tape.leaf(input));
  return tape.value(out);
}

void save_checkpoint(const Parameters& params, const std::filesystem::path& path,
                     const char* magic) {
  if (std::strlen(magic) != 4) throw ContractError("checkpoint magic must be 4 bytes");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path.string());
  out.write(magic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const Layer& l : params.layers) {
    write_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
    write_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
    write_f64s(out, l.weight.data());
    write_f64s(out, l.bias.data());
  }
  if (!out) throw FormatError("failed writing checkpoint " + path.string());
}

Parameters load_checkpoint(const std::filesystem::path& path, Role role, const char* want_magic) {
  if (std::strlen(want_magic) != 4) throw ContractError("checkpoint magic must be 4 bytes");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, want_magic, 4) != 0)
    throw FormatError("bad checkpoint magic \"" + std::string(magic, in ? 4 : 0) +
                      "\", expected \"" + want_magic + "\"");
  std::uint32_t version = read_u32(in, "version");
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  std::uint32_t count = read_u32(in, "layer count");
  Parameters p;
  p.role = role;
  for (std::uint32_t l = 0; l < count; ++l) {
    std::uint32_t rows = read_u32(in, "rows");
    std::uint32_t cols = read_u32(in, "cols");
    if (rows == 0 || cols == 0)
      throw FormatError("checkpoint layer " + std::to_string(l) + " has zero extent");
    Layer layer;
    std::vector<double> w(static_cast<std::size_t>(rows) * cols);
    read_f64s(in, w, "weights");
    std::vector<double> b(rows);
    read_f64s(in, b, "biases");
    layer.weight = Tensor({rows, cols}, std::move(w));
    layer.bias = Tensor({1, rows}, std::move(b));
    if (!layer.weight.all_finite() || !layer.bias.all_finite())
      throw DomainError("checkpoint layer " + std::to_string(l) + " holds non-finite values");
    p.layers.push_back(std::move(layer));
  }
  return p;
}

MlpSpec synthetic_generator_spec(std::size_t noise_dim) {
  MlpSpec s;
  s.layer_widths = {noise_dim, 32, 32, 1};
  s.hidden_activation = Activation::tanh_act;
  s.output_activation = Activation::identity;
  return s;
}

MlpSpec synthetic_discriminator_spec(bool wasserstein) {
  MlpSpec s;
  s.layer_widths = {1, 32, 32, 1};
  s.hidden_activation = Activation::leaky_relu;
  s.output_activation = wasserstein ? Activation::identity : Activation::sigmoid;
  return s;
}

MlpSpec mnist_generator_spec(std::size_t noise_dim) {
  MlpSpec s;
  s.layer_widths = {noise_dim, 256, 512, 784};
  s.hidden_activation = Activation::relu;
  s.output_activation = Activation::tanh_act;
  return s;
}

MlpSpec mnist_discriminator_spec(bool wasserstein) {
  MlpSpec s;
  s.layer_widths = {784, 512, 256, 1};
  s.hidden_activation = Activation::leaky_relu;
  s.output_activation = wasserstein ? Activation::identity : Activation::sigmoid;
  return s;
}

}  // namespace gannoise
