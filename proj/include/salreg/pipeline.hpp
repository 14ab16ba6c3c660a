#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "salreg/graph.hpp"
#include "salreg/image.hpp"
#include "salreg/regression.hpp"
#include "salreg/slic.hpp"

namespace salreg {

/// Single-channel map in [0,1].
using SaliencyMap = RasterImage;

/// One score per superpixel, aligned with SuperpixelSegmentation labels.
using SuperpixelScores = std::vector<double>;

struct PipelineConfig {
  int n_superpixels = 200;
  double compactness = 10.0;
  std::uint64_t seed = 42;
  double rho = 0.1;
  double gamma_a = 1e-6;
  double gamma_i = 1.0;
  double beta = 0.2;
  bool parallel = true;

  RegressionParams regression() const { return {gamma_a, gamma_i, 1e12}; }
};

/// Rescales v to [lo, hi]; a constant vector maps to the midpoint.
std::vector<double> minmax_normalize(const std::vector<double>& v, double lo, double hi);

/// Stage 1: mean pixel value of the network map per superpixel.
SuperpixelScores pool_deepmap(const SaliencyMap& pixel_map, const SuperpixelSegmentation& seg);

/// Stage 2: border superpixels seeded with -1 and propagated through the
/// regression; result min-max normalized so border-like regions are low.
SuperpixelScores boundary_map(const SuperpixelGraph& graph, const SuperpixelSegmentation& seg,
                              const RegressionParams& params = {});

/// Stage 3: deep^(1-beta) * boundary^beta, elementwise, with 0^0 = 1.
SuperpixelScores fuse(const SuperpixelScores& deep, const SuperpixelScores& boundary, double beta);

/// Stage 4: rescale to [-1,1], label every node, solve, rescale to [0,1].
SuperpixelScores refine(const SuperpixelGraph& graph, const SuperpixelScores& cg,
                        const RegressionParams& params = {});

/// Paints each superpixel's score onto its pixels.
SaliencyMap render(const SuperpixelScores& scores, const SuperpixelSegmentation& seg);

struct StageTiming {
  std::string stage;
  double ms = 0;
};

struct PipelineResult {
  SuperpixelSegmentation segmentation;
  SuperpixelGraph graph;
  SuperpixelScores deep;
  SuperpixelScores boundary;
  SuperpixelScores coarse;
  SuperpixelScores refined;
  SaliencyMap final_map;
  std::vector<StageTiming> timings;
};

/// Full four-stage run: Lab conversion, SLIC, graph, pooling, boundary
/// propagation, fusion, refinement and paint-back.
PipelineResult run_pipeline_detailed(const RasterImage& image, const SaliencyMap& deepmap,
                                     const PipelineConfig& config);

SaliencyMap run_pipeline(const RasterImage& image, const SaliencyMap& deepmap,
                         const PipelineConfig& config);

}  // namespace salreg
