#include "gannoise/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>
#include <utility>

#include "gannoise/data.hpp"
#include "gannoise/metrics.hpp"
#include "gannoise/mlp.hpp"
#include "gannoise/trainer.hpp"

namespace gannoise {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw FormatError("short write: " + path.string());
}

}  // namespace

SweepOutcome run_sweep(const SweepDef& sweep, const std::filesystem::path& out_dir,
                       const SweepOptions& opts) {
  if (opts.parallelism < 1) throw ContractError("parallelism must be >= 1");
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path csv_path = out_dir / "results.csv";
  if (std::filesystem::exists(csv_path) && !opts.force)
    throw ContractError("refusing to overwrite " + csv_path.string() + " without force");

  for (const ExperimentConfig& cfg : sweep.cells) cfg.validate();

  // Everything a run could be missing resolves before any training starts.
  const bool needs_mnist =
      std::any_of(sweep.cells.begin(), sweep.cells.end(),
                  [](const ExperimentConfig& c) { return c.dataset == DatasetKind::mnist; });
  std::unique_ptr<MnistData> mnist;
  std::unique_ptr<metrics::Embedder> embedder;
  if (needs_mnist) {
    mnist = std::make_unique<MnistData>(load_mnist_dir(mnist_dir_from_env()));
    const std::filesystem::path emb_path = out_dir / "embedder.gnem";
    if (std::filesystem::exists(emb_path)) {
      embedder = std::make_unique<metrics::Embedder>(metrics::load_embedder(emb_path));
    } else {
      embedder = std::make_unique<metrics::Embedder>(metrics::train_embedder(*mnist));
      metrics::save_embedder(*embedder, emb_path);
    }
  }

  const std::filesystem::path ckpt_dir = out_dir / "checkpoints";
  if (opts.save_checkpoints && !sweep.cells.empty()) std::filesystem::create_directories(ckpt_dir);

  // Worker pool over independent cells; results land in per-cell slots so
  // completion order cannot leak into the output.
  std::vector<std::vector<MetricRecord>> per_cell(sweep.cells.size());
  std::vector<char> cell_failed(sweep.cells.size(), 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= sweep.cells.size()) return;
      try {
        const ExperimentConfig& cfg = sweep.cells[i];
        RunResult run = train_run(cfg, mnist.get(), embedder.get());
        // Failed runs hold non-finite parameters nothing can load or sample.
        if (opts.save_checkpoints && !run.failed) {
          const std::string id = run_id(cfg);
          save_checkpoint(run.g, ckpt_dir / (id + "-g.gnwt"));
          save_checkpoint(run.d, ckpt_dir / (id + "-d.gnwt"));
        }
        per_cell[i] = std::move(run.records);
        cell_failed[i] = run.failed ? 1 : 0;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(sweep.cells.size());  // stop handing out work
        return;
      }
    }
  };

  if (opts.parallelism == 1 || sweep.cells.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const std::size_t n_workers = std::min(opts.parallelism, sweep.cells.size());
    pool.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  SweepOutcome out;
  out.results_csv = csv_path;
  for (std::size_t i = 0; i < per_cell.size(); ++i) {
    out.records.insert(out.records.end(), per_cell[i].begin(), per_cell[i].end());
    out.failed_runs += cell_failed[i] ? 1 : 0;
  }
  sort_records(out.records);
  write_text(csv_path, to_csv(out.records, opts.strip_timing));
  return out;
}

}  // namespace gannoise
