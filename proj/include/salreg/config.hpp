#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "salreg/pipeline.hpp"
#include "salreg/tinynet.hpp"

namespace salreg {

/// Every tunable in one place. Defaults: N = 200 superpixels, rho = 0.1,
/// gamma_A = 1e-6, gamma_I = 1, beta = 0.2, eta^2 = 0.3, SGD weight decay
/// 5e-4 and momentum 0.99. The toy network uses lr 1e-4 and batches of 16
/// instead of the 1e-10 that suits a VGG-sized trunk; its loss sums over
/// pixels, so larger rates diverge.
struct Config {
  int n_superpixels = 200;
  double rho = 0.1;
  double gamma_a = 1e-6;
  double gamma_i = 1.0;
  double beta = 0.2;
  double slic_compactness = 10.0;
  std::uint64_t seed = 42;
  double eta2 = 0.3;

  // toy multi-task training
  int rounds = 3;
  int steps_per_phase = 200;
  int batch_size = 16;
  double lr = 1e-4;
  double momentum = 0.99;
  double weight_decay = 5e-4;
  int toy_size = 16;
  int toy_count = 64;

  PipelineConfig pipeline() const;
  tinynet::TrainConfig training() const;

  /// Sets one key; throws std::invalid_argument for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Checks positivity and range constraints.
  void validate() const;
  std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Reads `key = value` lines ('#' starts a comment) on top of `base`.
Config load_config_file(const std::filesystem::path& path, Config base = {});

}  // namespace salreg
