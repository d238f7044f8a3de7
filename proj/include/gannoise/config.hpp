#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gannoise/data.hpp"
#include "gannoise/losses.hpp"
#include "gannoise/optim.hpp"

namespace gannoise {

enum class DatasetKind { gaussian, mnist };
enum class LossKind { gan_nonsat, wgan_gp, wgan_clip };

std::string dataset_name(DatasetKind d);
std::string loss_name(LossKind l);
std::string noise_dist_name(NoiseDist d);

/// Update schedule: every generator step is preceded by n_critic
/// discriminator steps; metrics are evaluated every eval_every G-steps and
/// at the final step.
struct TrainSchedule {
  std::size_t total_steps = 0;
  std::size_t batch_size = 0;
  std::size_t n_critic = 1;
  std::size_t eval_every = 0;

  void validate() const;  // all positive, n_critic >= 1 (total_steps == 0 allowed: empty run)
};

struct EvalSpec {
  std::size_t eval_samples = 10000;  // per side for fd/jsd; generated count for fid/is
  std::size_t is_splits = 10;

  void validate() const;
};

/// One fully resolved sweep cell: everything a run needs, no implicit state.
struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::gaussian;
  std::size_t gaussian_modes = 1;  // 1 -> standard normal, 2 -> +-3 mixture
  LossKind loss = LossKind::gan_nonsat;
  NoiseSpec noise;
  TrainSchedule schedule;
  OptimizerConfig optimizer;
  double clip_c = losses::kDefaultClip;
  GpConfig gp;
  EvalSpec eval;
  std::uint64_t seed = 0;

  GaussianDataSpec data_spec() const;  // resolved from gaussian_modes
  void validate() const;
};

/// Canonical flat-JSON form with every default resolved and keys sorted;
/// equal configs produce equal text regardless of source-file key order.
std::string canonical_json(const ExperimentConfig& cfg);

/// SHA-256 of the canonical form, truncated to 128 bits (32 hex chars).
std::string fingerprint(const ExperimentConfig& cfg);

/// Human-readable deterministic run name.
std::string run_id(const ExperimentConfig& cfg);

struct SweepDef {
  std::vector<ExperimentConfig> cells;  // full cross product, fixed order
};

/// Parses a sweep file: flat JSON base config plus a `grid` object holding
/// the swept axes (noise_dims x noise_dists x losses x seeds). Unknown keys
/// and a missing seed list are errors. When neither `grid.noise_dims` nor a
/// base `noise_dim` is given, the dataset's standard dimension grid applies:
/// gaussian {1,2,5,10,15,18,20,25}, mnist {2,10,100,1000}.
SweepDef load_sweep(const std::filesystem::path& path);
SweepDef parse_sweep(const std::string& json_text);

// ---------------------------------------------------------------------------
// Results rows

struct MetricRecord {
  std::string run;          // run_id
  std::string fingerprint;  // 32-hex config fingerprint
  DatasetKind dataset = DatasetKind::gaussian;
  LossKind loss = LossKind::gan_nonsat;
  std::size_t noise_dim = 0;
  NoiseDist noise_dist = NoiseDist::standard_normal;
  std::uint64_t seed = 0;
  std::size_t step = 0;
  std::optional<double> fd, jsd, fid, is_mean, is_var;  // empty when inapplicable
  std::optional<double> d_loss, g_loss;
  bool failed = false;
  std::int64_t wall_ms = 0;
};

inline constexpr const char* kCsvHeader =
    "run_id,fingerprint,dataset,loss,noise_dim,noise_dist,seed,step,"
    "fd,jsd,fid,is_mean,is_var,d_loss,g_loss,failed,wall_ms";

/// Shortest round-trip decimal text for a double (std::to_chars).
std::string format_double(double v);

/// Serializes records (assumed already ordered) under the exact schema
/// header. strip_timing writes an empty wall_ms column for byte-stable
/// comparisons.
std::string to_csv(const std::vector<MetricRecord>& records, bool strip_timing = false);

/// Stable result order: fingerprint, then step.
void sort_records(std::vector<MetricRecord>& records);

/// Parses a CSV produced by to_csv. Throws FormatError on schema drift.
std::vector<MetricRecord> parse_csv(const std::string& text);
std::vector<MetricRecord> load_csv(const std::filesystem::path& path);

}  // namespace gannoise
