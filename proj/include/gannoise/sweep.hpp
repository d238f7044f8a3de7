#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "gannoise/config.hpp"

namespace gannoise {

struct SweepOptions {
  std::size_t parallelism = 1;
  bool force = false;            // overwrite an existing results.csv
  bool strip_timing = false;     // blank the wall_ms column in the CSV
  bool save_checkpoints = true;  // per-run parameter files under checkpoints/
};

struct SweepOutcome {
  std::filesystem::path results_csv;
  std::vector<MetricRecord> records;  // sorted by (fingerprint, step)
  std::size_t failed_runs = 0;
};

/// Executes every sweep cell exactly once (worker pool of `parallelism`
/// threads; runs share nothing mutable) and writes results.csv plus per-run
/// checkpoints under out_dir. Row order is sorted, so the file bytes do not
/// depend on worker count or completion order; wall_ms is the only
/// non-deterministic column and strip_timing blanks it.
///
/// MNIST cells resolve their dataset (GANNOISE_MNIST_DIR) and the shared
/// embedder before any training starts: the embedder is loaded from
/// out_dir/embedder.gnem when present, otherwise trained at the default
/// budget and cached there. Refuses to overwrite existing results unless
/// opts.force.
SweepOutcome run_sweep(const SweepDef& sweep, const std::filesystem::path& out_dir,
                       const SweepOptions& opts = {});

}  // namespace gannoise
