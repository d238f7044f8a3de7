// gannoise: sweep runner, plotter, sample dumper and embedder trainer.
//
// Subcommands:
//   sweep     run every cell of a sweep config and write results.csv
//   plot      render one metric column of a results file as an SVG chart
//   dump      sample a trained generator checkpoint to PGM images or
//             histogram tables
//   embedder  train the feature embedder used by fid/is and save it

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "gannoise/config.hpp"
#include "gannoise/data.hpp"
#include "gannoise/dump.hpp"
#include "gannoise/metrics.hpp"
#include "gannoise/mlp.hpp"
#include "gannoise/plot.hpp"
#include "gannoise/rng.hpp"
#include "gannoise/sweep.hpp"

namespace fs = std::filesystem;

namespace {

int run_sweep_cmd(const fs::path& config, const fs::path& out, std::size_t parallelism,
                  bool force, bool strip_timing) {
  gannoise::SweepDef def = gannoise::load_sweep(config);
  gannoise::SweepOptions opts;
  opts.parallelism = parallelism;
  opts.force = force;
  opts.strip_timing = strip_timing;
  gannoise::SweepOutcome outcome = gannoise::run_sweep(def, out, opts);
  std::cout << outcome.records.size() << " rows over " << def.cells.size() << " runs ("
            << outcome.failed_runs << " failed) -> " << outcome.results_csv.string() << "\n";
  return 0;
}

int run_plot_cmd(const fs::path& results, const std::string& metric, const fs::path& out) {
  gannoise::emit_plot_svg(results, metric, out);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int run_dump_cmd(const fs::path& checkpoint, const std::string& dataset, std::size_t n,
                 const fs::path& out, const std::string& dist, std::uint64_t seed,
                 std::size_t bins) {
  gannoise::Parameters g =
      gannoise::load_checkpoint(checkpoint, gannoise::Role::generator);
  gannoise::NoiseDist noise_dist = dist == "uniform" ? gannoise::NoiseDist::uniform_pm1
                                                     : gannoise::NoiseDist::standard_normal;
  if (dataset == "mnist") {
    std::vector<fs::path> files = gannoise::dump_mnist_pgms(g, noise_dist, n, seed, out);
    std::cout << files.size() << " images -> " << out.string() << "\n";
    return 0;
  }
  // Dumps compare generated samples against the standard unimodal target.
  gannoise::GaussianDataSpec data = gannoise::GaussianDataSpec::unimodal(0.0, 1.0);
  gannoise::GaussianDumpPaths paths =
      gannoise::dump_gaussian_histograms(g, noise_dist, data, bins, seed, out);
  std::cout << "histograms -> " << paths.generated.string() << ", " << paths.real.string()
            << "\n";
  return 0;
}

int run_embedder_cmd(std::string mnist_dir, const fs::path& out, std::uint64_t seed) {
  if (mnist_dir.empty()) mnist_dir = gannoise::mnist_dir_from_env().string();
  gannoise::MnistData data = gannoise::load_mnist_dir(mnist_dir);
  gannoise::metrics::Embedder e = gannoise::metrics::train_embedder(data, seed);
  gannoise::metrics::save_embedder(e, out);
  std::cout << "test accuracy " << e.test_accuracy << " -> " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAN input-noise dimension laboratory"};
  app.require_subcommand(1);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a sweep config and write results.csv");
  fs::path sweep_config, sweep_out;
  std::size_t parallelism = 1;
  bool force = false;
  bool strip_timing = false;
  sweep->add_option("--config", sweep_config, "Sweep JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_flag("--force", force, "Overwrite an existing results.csv");
  sweep->add_flag("--strip-timing", strip_timing, "Blank the wall_ms column");

  // plot
  auto* plot = app.add_subcommand("plot", "Render a metric column as an SVG chart");
  fs::path plot_results, plot_out;
  std::string metric;
  plot->add_option("--results", plot_results, "results.csv from a sweep")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--metric", metric, "One of fd|jsd|fid|is_mean")->required();
  plot->add_option("--out", plot_out, "Output SVG path")->required();

  // dump
  auto* dump = app.add_subcommand("dump", "Sample a generator checkpoint to files");
  fs::path dump_ckpt, dump_out;
  std::string dataset, dist = "normal";
  std::size_t n = 16;
  std::uint64_t dump_seed = 0;
  std::size_t bins = 80;
  dump->add_option("--checkpoint", dump_ckpt, "Generator .gnwt checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  dump->add_option("--dataset", dataset, "gaussian or mnist")
      ->required()
      ->check(CLI::IsMember({"gaussian", "mnist"}));
  dump->add_option("--n", n, "Sample count")->check(CLI::PositiveNumber);
  dump->add_option("--out", dump_out, "Output directory")->required();
  dump->add_option("--dist", dist, "Noise distribution: normal or uniform")
      ->check(CLI::IsMember({"normal", "uniform"}));
  dump->add_option("--seed", dump_seed, "Noise seed");
  dump->add_option("--bins", bins, "Histogram bins (gaussian dumps)")
      ->check(CLI::PositiveNumber);

  // embedder
  auto* embedder = app.add_subcommand("embedder", "Train and save the metric embedder");
  std::string mnist_dir;
  fs::path embedder_out;
  std::uint64_t embedder_seed = gannoise::metrics::kEmbedderDefaultSeed;
  embedder->add_option("--mnist-dir", mnist_dir,
                       "MNIST directory (falls back to GANNOISE_MNIST_DIR)");
  embedder->add_option("--out", embedder_out, "Output .gnem path")->required();
  embedder->add_option("--seed", embedder_seed, "Training seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed())
      return run_sweep_cmd(sweep_config, sweep_out, parallelism, force, strip_timing);
    if (plot->parsed()) return run_plot_cmd(plot_results, metric, plot_out);
    if (dump->parsed()) return run_dump_cmd(dump_ckpt, dataset, n, dump_out, dist, dump_seed, bins);
    if (embedder->parsed()) return run_embedder_cmd(mnist_dir, embedder_out, embedder_seed);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
