#include "gannoise/data.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <string>

namespace gannoise {

namespace {

std::uint32_t read_be_u32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (static_cast<std::uint32_t>(b[off]) << 24) |
         (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

std::string hex_u32(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xF];
  return s;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FormatError("cannot open dataset file: " + path.string());
  std::streamsize len = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len));
  in.read(reinterpret_cast<char*>(bytes.data()), len);
  if (!in) throw FormatError("failed reading dataset file: " + path.string());
  return bytes;
}

ImageDataset load_split(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, SplitTag tag) {
  IdxPart images = parse_idx(read_file_bytes(images_path));
  if (!images.is_images)
    throw FormatError(images_path.string() + " holds labels, expected images");
  IdxPart labels = parse_idx(read_file_bytes(labels_path));
  if (labels.is_images)
    throw FormatError(labels_path.string() + " holds images, expected labels");
  if (images.images.rows() != labels.labels.size())
    throw FormatError("image/label count mismatch: " + std::to_string(images.images.rows()) +
                      " vs " + std::to_string(labels.labels.size()));
  ImageDataset out;
  out.images = std::move(images.images);
  out.labels = std::move(labels.labels);
  out.split = tag;
  return out;
}

}  // namespace

void GaussianDataSpec::validate() const {
  if (modes != 1 && modes != 2)
    throw ContractError("gaussian spec supports 1 or 2 modes, got " + std::to_string(modes));
  if (means.size() != modes || variances.size() != modes || mix_weights.size() != modes)
    throw ContractError("gaussian spec field lengths must equal the mode count");
  double wsum = 0.0;
  for (double w : mix_weights) {
    if (w < 0.0) throw ContractError("mix weights must be nonnegative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw ContractError("mix weights sum to " + std::to_string(wsum) + ", expected 1");
  for (double v : variances)
    if (v <= 0.0) throw ContractError("variances must be positive");
}

GaussianDataSpec GaussianDataSpec::unimodal(double mean, double variance) {
  GaussianDataSpec s;
  s.modes = 1;
  s.means = {mean};
  s.variances = {variance};
  s.mix_weights = {1.0};
  return s;
}

GaussianDataSpec GaussianDataSpec::bimodal_default(double variance) {
  GaussianDataSpec s;
  s.modes = 2;
  s.means = {-3.0, 3.0};
  s.variances = {variance, variance};
  s.mix_weights = {0.5, 0.5};
  return s;
}

void NoiseSpec::validate() const {
  if (dim < 1) throw ContractError("noise dim must be >= 1");
}

Tensor sample_gaussian_data(const GaussianDataSpec& spec, std::size_t n, RngStream& rng) {
  spec.validate();
  if (n < 1) throw ContractError("sample count must be >= 1");
  Tensor out = Tensor::zeros({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    // Mode pick always consumes one draw, even for a single mode, so the
    // unimodal spec is stream-aligned with a degenerate two-mode one.
    double u = rng.next_unit();
    std::size_t mode = 0;
    double acc = 0.0;
    for (std::size_t m = 0; m < spec.modes; ++m) {
      acc += spec.mix_weights[m];
      if (u < acc) {
        mode = m;
        break;
      }
      mode = m;  // numeric slack: u may exceed the accumulated total
    }
    out[i] = rng.normal(spec.means[mode], std::sqrt(spec.variances[mode]));
  }
  return out;
}

Tensor sample_noise(const NoiseSpec& spec, std::size_t n, RngStream& rng) {
  spec.validate();
  if (n < 1) throw ContractError("sample count must be >= 1");
  Tensor out = Tensor::zeros({n, spec.dim});
  if (spec.dist == NoiseDist::standard_normal) {
    for (double& v : out.data()) v = rng.normal();
  } else {
    for (double& v : out.data()) v = rng.uniform_pm1();
  }
  return out;
}

IdxPart parse_idx(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw FormatError("idx data shorter than the 4-byte magic");
  std::uint32_t magic = read_be_u32(bytes, 0);

  if (magic == 0x00000803u) {
    if (bytes.size() < 16) throw FormatError("idx image header truncated");
    std::size_t n = read_be_u32(bytes, 4);
    std::size_t rows = read_be_u32(bytes, 8);
    std::size_t cols = read_be_u32(bytes, 12);
    std::size_t expected = 16 + n * rows * cols;
    if (bytes.size() != expected)
      throw FormatError("idx image payload length mismatch: expected " +
                        std::to_string(expected) + " bytes, got " +
                        std::to_string(bytes.size()));
    IdxPart part;
    part.is_images = true;
    part.images = Tensor::zeros({n, rows * cols});
    for (std::size_t i = 0; i < n * rows * cols; ++i)
      part.images[i] = static_cast<double>(bytes[16 + i]) / 127.5 - 1.0;
    return part;
  }

  if (magic == 0x00000801u) {
    if (bytes.size() < 8) throw FormatError("idx label header truncated");
    std::size_t n = read_be_u32(bytes, 4);
    std::size_t expected = 8 + n;
    if (bytes.size() != expected)
      throw FormatError("idx label payload length mismatch: expected " +
                        std::to_string(expected) + " bytes, got " +
                        std::to_string(bytes.size()));
    IdxPart part;
    part.is_images = false;
    part.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      int label = bytes[8 + i];
      if (label > 9)
        throw FormatError("idx label " + std::to_string(label) + " outside [0,9]");
      part.labels.push_back(label);
    }
    return part;
  }

  throw FormatError("bad idx magic " + hex_u32(magic) +
                    ", expected 0x00000803 (images) or 0x00000801 (labels)");
}

MnistData load_mnist_dir(const std::filesystem::path& dir) {
  MnistData data;
  data.train = load_split(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte",
                          SplitTag::train);
  data.test =
      load_split(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", SplitTag::test);
  return data;
}

std::filesystem::path mnist_dir_from_env() {
  const char* dir = std::getenv("GANNOISE_MNIST_DIR");
  if (dir == nullptr || *dir == '\0')
    throw ContractError("GANNOISE_MNIST_DIR is not set; point it at the idx dataset directory");
  return {dir};
}

}  // namespace gannoise
