#include "gannoise/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace gannoise {

namespace {

using nlohmann::json;

constexpr const char* kTopLevelKeys[] = {
    "dataset",    "gaussian_modes", "loss",       "noise_dim", "noise_dist", "total_steps",
    "batch_size", "n_critic",       "eval_every", "optimizer", "lr",         "beta1",
    "beta2",      "clip_c",         "gp_lambda",  "eval_samples", "is_splits", "grid"};
constexpr const char* kGridKeys[] = {"noise_dims", "noise_dists", "losses", "seeds"};

[[noreturn]] void bad_value(const std::string& key, const std::string& what) {
  throw FormatError("config key \"" + key + "\": " + what);
}

std::uint64_t get_u64(const json& v, const std::string& key) {
  if (!v.is_number_integer() && !v.is_number_unsigned())
    bad_value(key, "expected a nonnegative integer");
  if (v.is_number_integer() && v.get<std::int64_t>() < 0)
    bad_value(key, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

double get_f64(const json& v, const std::string& key) {
  if (!v.is_number()) bad_value(key, "expected a number");
  return v.get<double>();
}

std::string get_str(const json& v, const std::string& key) {
  if (!v.is_string()) bad_value(key, "expected a string");
  return v.get<std::string>();
}

DatasetKind parse_dataset(const std::string& s) {
  if (s == "gaussian") return DatasetKind::gaussian;
  if (s == "mnist") return DatasetKind::mnist;
  throw FormatError("unknown dataset \"" + s + "\" (expected gaussian or mnist)");
}

LossKind parse_loss(const std::string& s) {
  if (s == "gan_nonsat") return LossKind::gan_nonsat;
  if (s == "wgan_gp") return LossKind::wgan_gp;
  if (s == "wgan_clip") return LossKind::wgan_clip;
  throw FormatError("unknown loss \"" + s + "\" (expected gan_nonsat, wgan_gp or wgan_clip)");
}

NoiseDist parse_dist(const std::string& s) {
  if (s == "normal") return NoiseDist::standard_normal;
  if (s == "uniform") return NoiseDist::uniform_pm1;
  throw FormatError("unknown noise_dist \"" + s + "\" (expected normal or uniform)");
}

OptKind parse_opt(const std::string& s) {
  if (s == "adam") return OptKind::adam;
  if (s == "sgd") return OptKind::sgd;
  throw FormatError("unknown optimizer \"" + s + "\" (expected adam or sgd)");
}

std::string sha256_hex_128(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1 || len < 16)
    throw ContractError("sha-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(32);
  for (int i = 0; i < 16; ++i) {  // 128-bit truncation
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

}  // namespace

std::string dataset_name(DatasetKind d) {
  return d == DatasetKind::gaussian ? "gaussian" : "mnist";
}

std::string loss_name(LossKind l) {
  switch (l) {
    case LossKind::gan_nonsat: return "gan_nonsat";
    case LossKind::wgan_gp: return "wgan_gp";
    case LossKind::wgan_clip: return "wgan_clip";
  }
  throw ContractError("unhandled loss kind");
}

std::string noise_dist_name(NoiseDist d) {
  return d == NoiseDist::standard_normal ? "normal" : "uniform";
}

void TrainSchedule::validate() const {
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (n_critic < 1) throw ContractError("n_critic must be >= 1");
  if (eval_every < 1) throw ContractError("eval_every must be >= 1");
}

void EvalSpec::validate() const {
  if (eval_samples < 2) throw ContractError("eval_samples must be >= 2");
  if (is_splits < 1) throw ContractError("is_splits must be >= 1");
}

GaussianDataSpec ExperimentConfig::data_spec() const {
  if (gaussian_modes == 1) return GaussianDataSpec::unimodal(0.0, 1.0);
  return GaussianDataSpec::bimodal_default(1.0);
}

void ExperimentConfig::validate() const {
  if (gaussian_modes != 1 && gaussian_modes != 2)
    throw ContractError("gaussian_modes must be 1 or 2, got " + std::to_string(gaussian_modes));
  noise.validate();
  schedule.validate();
  optimizer.validate();
  gp.validate();
  eval.validate();
  if (!(clip_c > 0.0)) throw ContractError("clip_c must be positive");
}

std::string canonical_json(const ExperimentConfig& cfg) {
  cfg.validate();
  json j;  // std::map-backed: keys serialize sorted
  j["batch_size"] = cfg.schedule.batch_size;
  j["beta1"] = cfg.optimizer.beta1;
  j["beta2"] = cfg.optimizer.beta2;
  j["clip_c"] = cfg.clip_c;
  j["dataset"] = dataset_name(cfg.dataset);
  j["eval_every"] = cfg.schedule.eval_every;
  j["eval_samples"] = cfg.eval.eval_samples;
  j["gaussian_modes"] = cfg.gaussian_modes;
  j["gp_lambda"] = cfg.gp.lambda;
  j["is_splits"] = cfg.eval.is_splits;
  j["loss"] = loss_name(cfg.loss);
  j["lr"] = cfg.optimizer.lr;
  j["n_critic"] = cfg.schedule.n_critic;
  j["noise_dim"] = cfg.noise.dim;
  j["noise_dist"] = noise_dist_name(cfg.noise.dist);
  j["optimizer"] = cfg.optimizer.kind == OptKind::adam ? "adam" : "sgd";
  j["seed"] = cfg.seed;
  j["total_steps"] = cfg.schedule.total_steps;
  return j.dump();
}

std::string fingerprint(const ExperimentConfig& cfg) { return sha256_hex_128(canonical_json(cfg)); }

std::string run_id(const ExperimentConfig& cfg) {
  std::string id = dataset_name(cfg.dataset);
  if (cfg.dataset == DatasetKind::gaussian && cfg.gaussian_modes == 2) id += "-bimodal";
  id += "-" + loss_name(cfg.loss);
  id += "-d" + std::to_string(cfg.noise.dim);
  id += "-" + noise_dist_name(cfg.noise.dist);
  id += "-s" + std::to_string(cfg.seed);
  return id;
}

SweepDef parse_sweep(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("sweep file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("sweep file must hold a JSON object");

  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(std::begin(kTopLevelKeys), std::end(kTopLevelKeys),
                     [&](const char* k) { return key == k; }) == std::end(kTopLevelKeys))
      throw FormatError("unknown config key \"" + key + "\"");
  }

  // --- base values (grid axes may override per cell)
  if (!j.contains("dataset")) throw FormatError("missing required key \"dataset\"");
  const DatasetKind dataset = parse_dataset(get_str(j["dataset"], "dataset"));

  ExperimentConfig base;
  base.dataset = dataset;
  if (j.contains("gaussian_modes"))
    base.gaussian_modes = get_u64(j["gaussian_modes"], "gaussian_modes");

  LossKind base_loss = LossKind::gan_nonsat;
  if (j.contains("loss")) base_loss = parse_loss(get_str(j["loss"], "loss"));
  std::size_t base_dim = 10;
  if (j.contains("noise_dim")) base_dim = get_u64(j["noise_dim"], "noise_dim");
  NoiseDist base_dist = NoiseDist::standard_normal;
  if (j.contains("noise_dist")) base_dist = parse_dist(get_str(j["noise_dist"], "noise_dist"));

  if (j.contains("eval_samples")) base.eval.eval_samples = get_u64(j["eval_samples"], "eval_samples");
  if (j.contains("is_splits")) base.eval.is_splits = get_u64(j["is_splits"], "is_splits");
  if (j.contains("clip_c")) base.clip_c = get_f64(j["clip_c"], "clip_c");
  if (j.contains("gp_lambda")) base.gp.lambda = get_f64(j["gp_lambda"], "gp_lambda");

  // --- grid axes
  if (!j.contains("grid") || !j["grid"].is_object())
    throw FormatError("missing required \"grid\" object (must hold the seed list)");
  const json& grid = j["grid"];
  for (const auto& [key, value] : grid.items()) {
    (void)value;
    if (std::find_if(std::begin(kGridKeys), std::end(kGridKeys),
                     [&](const char* k) { return key == k; }) == std::end(kGridKeys))
      throw FormatError("unknown grid key \"" + key + "\"");
  }

  const auto axis_u64 = [&](const char* key) {
    std::vector<std::uint64_t> out;
    if (!grid[key].is_array()) bad_value(std::string("grid.") + key, "expected an array");
    for (const json& v : grid[key]) out.push_back(get_u64(v, std::string("grid.") + key));
    if (out.empty()) bad_value(std::string("grid.") + key, "axis must not be empty");
    return out;
  };

  if (!grid.contains("seeds"))
    throw FormatError("grid is missing the \"seeds\" list: every run must be seeded");
  const std::vector<std::uint64_t> seeds = axis_u64("seeds");

  std::vector<std::size_t> dims;
  if (grid.contains("noise_dims")) {
    for (std::uint64_t v : axis_u64("noise_dims")) dims.push_back(static_cast<std::size_t>(v));
  } else if (j.contains("noise_dim")) {
    dims.push_back(base_dim);  // an explicit base dimension pins a one-column grid
  } else {
    dims = dataset == DatasetKind::gaussian ? std::vector<std::size_t>{1, 2, 5, 10, 15, 18, 20, 25}
                                            : std::vector<std::size_t>{2, 10, 100, 1000};
  }

  std::vector<NoiseDist> dists;
  if (grid.contains("noise_dists")) {
    if (!grid["noise_dists"].is_array()) bad_value("grid.noise_dists", "expected an array");
    for (const json& v : grid["noise_dists"])
      dists.push_back(parse_dist(get_str(v, "grid.noise_dists")));
    if (dists.empty()) bad_value("grid.noise_dists", "axis must not be empty");
  } else {
    dists.push_back(base_dist);
  }

  std::vector<LossKind> losses;
  if (grid.contains("losses")) {
    if (!grid["losses"].is_array()) bad_value("grid.losses", "expected an array");
    for (const json& v : grid["losses"]) losses.push_back(parse_loss(get_str(v, "grid.losses")));
    if (losses.empty()) bad_value("grid.losses", "axis must not be empty");
  } else {
    losses.push_back(base_loss);
  }

  // --- per-cell resolution: loss family and dataset set the defaults,
  //     explicit keys override them uniformly.
  SweepDef def;
  for (LossKind loss : losses) {
    for (NoiseDist dist : dists) {
      for (std::size_t dim : dims) {
        for (std::uint64_t seed : seeds) {
          ExperimentConfig cfg = base;
          cfg.loss = loss;
          cfg.noise = NoiseSpec{dim, dist};
          cfg.seed = seed;

          cfg.optimizer = (loss == LossKind::gan_nonsat) ? gan_default_optimizer()
                                                         : wgan_default_optimizer();
          if (j.contains("optimizer")) cfg.optimizer.kind = parse_opt(get_str(j["optimizer"], "optimizer"));
          if (j.contains("lr")) cfg.optimizer.lr = get_f64(j["lr"], "lr");
          if (j.contains("beta1")) cfg.optimizer.beta1 = get_f64(j["beta1"], "beta1");
          if (j.contains("beta2")) cfg.optimizer.beta2 = get_f64(j["beta2"], "beta2");

          cfg.schedule.total_steps = dataset == DatasetKind::gaussian ? 3000 : 10000;
          cfg.schedule.batch_size = dataset == DatasetKind::gaussian ? 256 : 64;
          cfg.schedule.n_critic = (loss == LossKind::gan_nonsat) ? 1 : 5;
          if (j.contains("total_steps")) cfg.schedule.total_steps = get_u64(j["total_steps"], "total_steps");
          if (j.contains("batch_size")) cfg.schedule.batch_size = get_u64(j["batch_size"], "batch_size");
          if (j.contains("n_critic")) cfg.schedule.n_critic = get_u64(j["n_critic"], "n_critic");
          cfg.schedule.eval_every = std::max<std::size_t>(cfg.schedule.total_steps, 1);
          if (j.contains("eval_every")) cfg.schedule.eval_every = get_u64(j["eval_every"], "eval_every");

          cfg.validate();
          def.cells.push_back(std::move(cfg));
        }
      }
    }
  }
  return def;
}

SweepDef load_sweep(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open sweep file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sweep(buf.str());
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string opt_field(const std::optional<double>& v) {
  return v.has_value() ? format_double(*v) : std::string();
}

}  // namespace

std::string to_csv(const std::vector<MetricRecord>& records, bool strip_timing) {
  std::string out = kCsvHeader;
  out.push_back('\n');
  for (const MetricRecord& r : records) {
    out += r.run;
    out += ',';
    out += r.fingerprint;
    out += ',';
    out += dataset_name(r.dataset);
    out += ',';
    out += loss_name(r.loss);
    out += ',';
    out += std::to_string(r.noise_dim);
    out += ',';
    out += noise_dist_name(r.noise_dist);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += std::to_string(r.step);
    out += ',';
    out += opt_field(r.fd);
    out += ',';
    out += opt_field(r.jsd);
    out += ',';
    out += opt_field(r.fid);
    out += ',';
    out += opt_field(r.is_mean);
    out += ',';
    out += opt_field(r.is_var);
    out += ',';
    out += opt_field(r.d_loss);
    out += ',';
    out += opt_field(r.g_loss);
    out += ',';
    out += (r.failed ? "1" : "0");
    out += ',';
    if (!strip_timing) out += std::to_string(r.wall_ms);
    out.push_back('\n');
  }
  return out;
}

void sort_records(std::vector<MetricRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const MetricRecord& a, const MetricRecord& b) {
                     if (a.fingerprint != b.fingerprint) return a.fingerprint < b.fingerprint;
                     return a.step < b.step;
                   });
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::optional<double> parse_opt_double(const std::string& s, std::size_t line_no) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("csv line " + std::to_string(line_no) + ": bad number \"" + s + "\"");
  return v;
}

std::uint64_t parse_u64_field(const std::string& s, std::size_t line_no) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("csv line " + std::to_string(line_no) + ": bad integer \"" + s + "\"");
  return v;
}

}  // namespace

std::vector<MetricRecord> parse_csv(const std::string& text) {
  std::vector<MetricRecord> out;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw FormatError("csv header mismatch: expected \"" + std::string(kCsvHeader) + "\"");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    if (f.size() != 17)
      throw FormatError("csv line " + std::to_string(line_no) + ": expected 17 fields, got " +
                        std::to_string(f.size()));
    MetricRecord r;
    r.run = f[0];
    r.fingerprint = f[1];
    r.dataset = parse_dataset(f[2]);
    r.loss = parse_loss(f[3]);
    r.noise_dim = static_cast<std::size_t>(parse_u64_field(f[4], line_no));
    r.noise_dist = parse_dist(f[5]);
    r.seed = parse_u64_field(f[6], line_no);
    r.step = static_cast<std::size_t>(parse_u64_field(f[7], line_no));
    r.fd = parse_opt_double(f[8], line_no);
    r.jsd = parse_opt_double(f[9], line_no);
    r.fid = parse_opt_double(f[10], line_no);
    r.is_mean = parse_opt_double(f[11], line_no);
    r.is_var = parse_opt_double(f[12], line_no);
    r.d_loss = parse_opt_double(f[13], line_no);
    r.g_loss = parse_opt_double(f[14], line_no);
    if (f[15] != "0" && f[15] != "1")
      throw FormatError("csv line " + std::to_string(line_no) + ": bad failed flag \"" + f[15] +
                        "\"");
    r.failed = (f[15] == "1");
    r.wall_ms = f[16].empty() ? 0 : static_cast<std::int64_t>(parse_u64_field(f[16], line_no));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MetricRecord> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open results csv: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

}  // namespace gannoise
