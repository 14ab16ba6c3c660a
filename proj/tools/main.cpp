// salreg command-line driver.

#include <omp.h>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "manifest.hpp"
#include "salreg/error.hpp"

namespace {

using salreg::Config;
namespace cli = salreg::cli;

// Flags shared by every subcommand; applied over the config file.
struct CommonFlags {
  std::optional<std::string> config_file;
  std::vector<std::string> sets;
  std::optional<std::string> n, beta, rho, gamma_a, gamma_i, compactness, seed, eta2;
  std::optional<std::string> rounds, steps, lr, momentum, toy_size, toy_count;
  int jobs = 1;

  void add_to(CLI::App& app) {
    app.add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--set", sets, "override any config key (key=value)");
    app.add_option("--n", n, "number of superpixels");
    app.add_option("--beta", beta, "boundary-map fusion weight");
    app.add_option("--rho", rho, "RBF width");
    app.add_option("--gamma-a", gamma_a, "ambient regularizer");
    app.add_option("--gamma-i", gamma_i, "Laplacian regularizer");
    app.add_option("--compactness", compactness, "SLIC compactness");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--eta2", eta2, "F-measure weight");
    app.add_option("--jobs", jobs, "worker threads (capped by SAL_THREADS)")->check(CLI::PositiveNumber);
  }

  void add_training(CLI::App& app) {
    app.add_option("--rounds", rounds, "alternation rounds");
    app.add_option("--steps", steps, "SGD steps per phase");
    app.add_option("--lr", lr, "learning rate");
    app.add_option("--momentum", momentum, "SGD momentum");
    app.add_option("--toy-size", toy_size, "synthetic image side");
    app.add_option("--toy-count", toy_count, "synthetic images per task");
  }

  Config resolve() const {
    Config c = config_file ? salreg::load_config_file(*config_file) : Config{};
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got " + kv);
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    const std::pair<const char*, const std::optional<std::string>*> flags[] = {
        {"n_superpixels", &n}, {"beta", &beta},          {"rho", &rho},
        {"gamma_A", &gamma_a}, {"gamma_I", &gamma_i},    {"slic_compactness", &compactness},
        {"seed", &seed},       {"eta2", &eta2},          {"rounds", &rounds},
        {"steps_per_phase", &steps}, {"lr", &lr},        {"momentum", &momentum},
        {"toy_size", &toy_size}, {"toy_count", &toy_count}};
    for (const auto& [key, value] : flags)
      if (*value) c.set(key, **value);
    c.validate();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-regularized saliency refinement toolkit"};
  app.set_version_flag("--version", cli::kVersion);
  app.require_subcommand(1);

  CommonFlags common;

  cli::SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "SLIC superpixels: labels.pgm + features.csv");
  segment->add_option("image", seg.image, "input PPM/PGM")->required();
  segment->add_option("--out", seg.out_dir, "output directory")->required();
  common.add_to(*segment);

  cli::RunArgs run;
  std::string dump_stages, dump_graph, run_manifest;
  auto* run_cmd = app.add_subcommand("run", "four-stage saliency refinement of one image");
  run_cmd->add_option("image", run.image, "input PPM/PGM")->required();
  run_cmd->add_option("deepmap", run.deepmap, "network saliency map (PGM)")->required();
  run_cmd->add_option("--out", run.out, "output saliency PGM")->required();
  run_cmd->add_flag("--resize", run.resize, "resize the deep map to the image size");
  run_cmd->add_option("--dump-stages", dump_stages, "write intermediate maps here");
  run_cmd->add_option("--dump-graph", dump_graph, "write W, K, L as CSV here");
  run_cmd->add_option("--manifest", run_manifest, "append a JSON-lines timing record");
  common.add_to(*run_cmd);

  cli::EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "aveF, maxF, AUC and MAE over a dataset");
  eval_cmd->add_option("pred_dir", eval.pred_dir, "predicted maps")->required();
  eval_cmd->add_option("gt_dir", eval.gt_dir, "ground-truth masks")->required();
  eval_cmd->add_option("--out", eval.out_dir, "report directory")->required();
  common.add_to(*eval_cmd);

  cli::TrainArgs train;
  std::string loss_csv;
  auto* train_cmd = app.add_subcommand("train-toy", "alternating multi-task training on synthetic discs");
  train_cmd->add_option("--out", train.out, "checkpoint path")->required();
  train_cmd->add_option("--loss-csv", loss_csv, "loss log (default: loss.csv next to the checkpoint)");
  common.add_to(*train_cmd);
  common.add_training(*train_cmd);

  cli::InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "saliency-head deep map from a checkpoint");
  infer_cmd->add_option("checkpoint", infer.checkpoint, "TNET1 checkpoint")->required();
  infer_cmd->add_option("image", infer.image, "input PPM/PGM")->required();
  infer_cmd->add_option("--out", infer.out, "output deep map PGM")->required();
  common.add_to(*infer_cmd);

  cli::BenchArgs bench;
  std::string deepmap_dir, bench_manifest;
  auto* bench_cmd = app.add_subcommand("bench", "batch pipeline runs with per-stage timings");
  bench_cmd->add_option("image_dir", bench.image_dir, "directory of PPM/PGM images")->required();
  bench_cmd->add_option("--out", bench.out_dir, "output directory")->required();
  bench_cmd->add_option("--deepmaps", deepmap_dir, "deep maps matched by file stem (default: center prior)");
  bench_cmd->add_option("--manifest", bench_manifest, "manifest path (default: OUT/manifest.jsonl)");
  common.add_to(*bench_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const Config config = common.resolve();
    const int threads = cli::thread_budget(common.jobs);
    if (segment->parsed()) {
      omp_set_num_threads(threads);
      return cli::cmd_segment(seg, config);
    }
    if (run_cmd->parsed()) {
      omp_set_num_threads(threads);
      if (!dump_stages.empty()) run.dump_stages = dump_stages;
      if (!dump_graph.empty()) run.dump_graph = dump_graph;
      if (!run_manifest.empty()) run.manifest = run_manifest;
      return cli::cmd_run(run, config);
    }
    if (eval_cmd->parsed()) return cli::cmd_eval(eval, config);
    if (train_cmd->parsed()) {
      omp_set_num_threads(threads);
      if (!loss_csv.empty()) train.loss_csv = loss_csv;
      return cli::cmd_train_toy(train, config);
    }
    if (infer_cmd->parsed()) {
      omp_set_num_threads(threads);
      return cli::cmd_infer(infer, config);
    }
    if (bench_cmd->parsed()) {
      bench.jobs = common.jobs;
      if (!deepmap_dir.empty()) bench.deepmap_dir = deepmap_dir;
      if (!bench_manifest.empty()) bench.manifest = bench_manifest;
      return cli::cmd_bench(bench, config);
    }
  } catch (const salreg::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const salreg::ParseError& e) {
    std::cerr << "error: " << e.what() << " (byte " << e.offset() << ")\n";
    return 2;
  } catch (const salreg::ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const cli::EmptyDatasetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const salreg::DivergenceError& e) {
    std::cerr << "error: " << e.what() << " (last finite loss " << e.last_finite_loss() << ")\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
