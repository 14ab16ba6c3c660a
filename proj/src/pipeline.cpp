#include "salreg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "salreg/error.hpp"

namespace salreg {

std::vector<double> minmax_normalize(const std::vector<double>& v, double lo, double hi) {
  if (v.empty()) return {};
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double low = *mn, range = *mx - *mn;
  std::vector<double> out(v.size(), 0.5 * (lo + hi));
  if (!(range > 0)) return out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = std::clamp(lo + (hi - lo) * (v[i] - low) / range, lo, hi);
  return out;
}

SuperpixelScores pool_deepmap(const SaliencyMap& pixel_map, const SuperpixelSegmentation& seg) {
  if (pixel_map.channels() != 1) throw ShapeError("deep map must be single-channel");
  if (pixel_map.width() != seg.width || pixel_map.height() != seg.height)
    throw ShapeError("deep map dimensions differ from the segmentation");
  // Deviations from each region's first pixel keep constant regions exact.
  SuperpixelScores ref(static_cast<std::size_t>(seg.n), NAN), sums(static_cast<std::size_t>(seg.n), 0.0);
  const auto values = pixel_map.data();
  for (std::size_t i = 0; i < seg.labels.size(); ++i) {
    const int r = seg.labels[i];
    if (std::isnan(ref[r])) ref[r] = values[i];
    sums[r] += values[i] - ref[r];
  }
  for (int r = 0; r < seg.n; ++r) sums[r] = std::clamp(ref[r] + sums[r] / seg.sizes[r], 0.0, 1.0);
  return sums;
}

SuperpixelScores boundary_map(const SuperpixelGraph& graph, const SuperpixelSegmentation& seg,
                              const RegressionParams& params) {
  if (graph.n != seg.n) throw ShapeError("graph and segmentation sizes differ");
  if (seg.n == 1) return {0.5};
  std::vector<int> labeled;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(seg.n);
  for (int r = 0; r < seg.n; ++r)
    if (seg.boundary[r]) {
      labeled.push_back(r);
      y[r] = -1.0;
    }
  if (labeled.empty()) throw std::logic_error("segmentation has no border superpixels");
  const RegressionSolution s = solve(RegressionProblem(graph, std::move(labeled), y, params));
  return minmax_normalize({s.g.data(), s.g.data() + s.g.size()}, 0.0, 1.0);
}

SuperpixelScores fuse(const SuperpixelScores& deep, const SuperpixelScores& boundary, double beta) {
  if (deep.size() != boundary.size()) throw ShapeError("fuse: score vectors differ in length");
  if (!(beta >= 0 && beta <= 1)) throw std::invalid_argument("fuse: beta must lie in [0,1]");
  // std::pow(0, 0) is 1, which is the convention wanted here.
  SuperpixelScores out(deep.size());
  for (std::size_t i = 0; i < deep.size(); ++i)
    out[i] = std::pow(deep[i], 1.0 - beta) * std::pow(boundary[i], beta);
  return out;
}

SuperpixelScores refine(const SuperpixelGraph& graph, const SuperpixelScores& cg,
                        const RegressionParams& params) {
  if (static_cast<int>(cg.size()) != graph.n) throw ShapeError("refine: score length differs");
  const std::vector<double> seeds = minmax_normalize(cg, -1.0, 1.0);
  std::vector<int> all(cg.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(seeds.data(), graph.n);
  const RegressionSolution s = solve(RegressionProblem(graph, std::move(all), y, params));
  return minmax_normalize({s.g.data(), s.g.data() + s.g.size()}, 0.0, 1.0);
}

SaliencyMap render(const SuperpixelScores& scores, const SuperpixelSegmentation& seg) {
  if (static_cast<int>(scores.size()) != seg.n) throw ShapeError("render: score length differs");
  std::vector<double> values(seg.labels.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = scores[seg.labels[i]];
  return SaliencyMap(seg.width, seg.height, 1, std::move(values));
}

namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out), last_(Clock::now()) {}
  void mark(const char* stage) {
    const auto now = Clock::now();
    out_.push_back({stage, std::chrono::duration<double, std::milli>(now - last_).count()});
    last_ = now;
  }

 private:
  using Clock = std::chrono::steady_clock;
  std::vector<StageTiming>& out_;
  Clock::time_point last_;
};

}  // namespace

PipelineResult run_pipeline_detailed(const RasterImage& image, const SaliencyMap& deepmap,
                                     const PipelineConfig& config) {
  if (deepmap.channels() != 1) throw ShapeError("deep map must be single-channel");
  if (deepmap.width() != image.width() || deepmap.height() != image.height())
    throw ShapeError("deep map and image dimensions differ");

  PipelineResult r;
  StageClock clock(r.timings);
  const LabImage lab = srgb_to_lab(image);
  clock.mark("lab");

  SlicOptions slic;
  slic.n_target = std::min<long>(config.n_superpixels, static_cast<long>(image.pixel_count()));
  slic.compactness = config.compactness;
  slic.seed = config.seed;
  slic.parallel = config.parallel;
  r.segmentation = oversegment(lab, slic);
  clock.mark("slic");

  const auto adjacency =
      build_adjacency(r.segmentation.labels, r.segmentation.width, r.segmentation.height);
  r.graph = build_graph(r.segmentation.features, adjacency, config.rho, config.parallel);
  clock.mark("graph");

  r.deep = pool_deepmap(deepmap, r.segmentation);
  clock.mark("deep");
  // With beta = 0 the boundary map has no influence on the fusion, so its
  // solve is skipped; the stage reports the constant 0.5.
  r.boundary = config.beta == 0.0 ? SuperpixelScores(static_cast<std::size_t>(r.segmentation.n), 0.5)
                                  : boundary_map(r.graph, r.segmentation, config.regression());
  clock.mark("boundary");
  r.coarse = fuse(r.deep, r.boundary, config.beta);
  clock.mark("fuse");
  r.refined = refine(r.graph, r.coarse, config.regression());
  clock.mark("refine");
  r.final_map = render(r.refined, r.segmentation);
  clock.mark("render");
  return r;
}

SaliencyMap run_pipeline(const RasterImage& image, const SaliencyMap& deepmap,
                         const PipelineConfig& config) {
  return run_pipeline_detailed(image, deepmap, config).final_map;
}

}  // namespace salreg
