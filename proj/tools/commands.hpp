#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "salreg/config.hpp"

namespace salreg::cli {

/// No usable image pairs or inputs.
class EmptyDatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SegmentArgs {
  std::filesystem::path image;
  std::filesystem::path out_dir;
};

struct RunArgs {
  std::filesystem::path image;
  std::filesystem::path deepmap;
  std::filesystem::path out;
  bool resize = false;
  std::optional<std::filesystem::path> dump_stages;
  std::optional<std::filesystem::path> dump_graph;
  std::optional<std::filesystem::path> manifest;
};

struct EvalArgs {
  std::filesystem::path pred_dir;
  std::filesystem::path gt_dir;
  std::filesystem::path out_dir;
};

struct TrainArgs {
  std::filesystem::path out;
  std::optional<std::filesystem::path> loss_csv;
};

struct InferArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path image;
  std::filesystem::path out;
};

struct BenchArgs {
  std::filesystem::path image_dir;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> deepmap_dir;
  std::optional<std::filesystem::path> manifest;
  int jobs = 1;
};

/// Thread budget: `requested`, capped by SAL_THREADS when set.
int thread_budget(int requested);

int cmd_segment(const SegmentArgs& args, const Config& config);
int cmd_run(const RunArgs& args, const Config& config);
int cmd_eval(const EvalArgs& args, const Config& config);
int cmd_train_toy(const TrainArgs& args, const Config& config);
int cmd_infer(const InferArgs& args, const Config& config);
int cmd_bench(const BenchArgs& args, const Config& config);

}  // namespace salreg::cli
