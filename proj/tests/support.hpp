#pragma once

// Fixtures shared by the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>
#include <algorithm>

#include "salreg/graph.hpp"
#include "salreg/image.hpp"
#include "salreg/regression.hpp"
#include "salreg/slic.hpp"

namespace salreg::testing {

inline RasterImage random_image(int w, int h, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(w) * h * channels);
  for (double& x : v) x = u(rng);
  return RasterImage(w, h, channels, std::move(v));
}

inline RasterImage constant_image(int w, int h, int channels, double value) {
  return RasterImage(w, h, channels, value);
}

/// Random connected segmentation: nearest of `seeds` random sites, then
/// connectivity enforcement.
inline SuperpixelSegmentation random_segmentation(int w, int h, int seeds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h);
  std::vector<std::pair<double, double>> sites(static_cast<std::size_t>(seeds));
  for (auto& s : sites) s = {ux(rng), uy(rng)};
  std::vector<int> labels(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int best = 0;
      double bd = 1e300;
      for (int k = 0; k < seeds; ++k) {
        const double dx = x + 0.5 - sites[k].first, dy = y + 0.5 - sites[k].second;
        if (dx * dx + dy * dy < bd) {
          bd = dx * dx + dy * dy;
          best = k;
        }
      }
      labels[static_cast<std::size_t>(y) * w + x] = best;
    }
  int n = 0;
  auto connected = enforce_connectivity(labels, w, h, &n);
  const LabImage lab = srgb_to_lab(random_image(w, h, 3, seed + 1));
  return make_segmentation(std::move(connected), n, lab);
}

/// Random n-node graph: features uniform in the unit cube, a spanning path
/// plus extra random edges.
inline SuperpixelGraph random_graph(int n, std::uint64_t seed, double rho = 0.1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<LabColor> f(static_cast<std::size_t>(n));
  for (auto& c : f) c = {u(rng), u(rng), u(rng)};
  std::vector<RegionPair> adj;
  for (int i = 0; i + 1 < n; ++i) adj.push_back({i, i + 1});
  for (int i = 0; i < n; ++i)
    for (int j = i + 2; j < n; ++j)
      if (u(rng) < 0.2) adj.push_back({i, j});
  std::sort(adj.begin(), adj.end());
  return build_graph(f, adj, rho);
}

/// Random labeled subset with seeds in [-1,1] and zeros elsewhere.
struct RandomSeeds {
  std::vector<int> labeled;
  Eigen::VectorXd y;
};

inline RandomSeeds random_seeds(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int l = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n));
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(l));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int i : idx) y[i] = u(rng);
  return {idx, y};
}

/// Bright disc on a darker ground with mild texture; ground truth is the disc.
struct DiscFixture {
  RasterImage image;
  RasterImage truth;
};

inline DiscFixture disc_fixture(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double radius = size * (0.15 + 0.1 * u(rng));
  const double cx = size * (0.35 + 0.3 * u(rng));
  const double cy = size * (0.35 + 0.3 * u(rng));
  double fg[3], bg[3];
  for (int c = 0; c < 3; ++c) {
    fg[c] = 0.55 + 0.4 * u(rng);
    bg[c] = 0.1 + 0.3 * u(rng);
  }
  RasterImage image(size, size, 3);
  RasterImage truth(size, size, 1);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const bool inside = dx * dx + dy * dy <= radius * radius;
      for (int c = 0; c < 3; ++c)
        image.at(x, y, c) = std::clamp((inside ? fg[c] : bg[c]) + 0.04 * (u(rng) - 0.5), 0.0, 1.0);
      truth.at(x, y) = inside ? 1.0 : 0.0;
    }
  return {std::move(image), std::move(truth)};
}

/// Three-image metrics fixture, k = 0..2; the same integer formulas drive
/// tests/oracles/metrics_oracle.py.
struct MetricsFixture {
  RasterImage prediction;
  RasterImage truth;
};

inline MetricsFixture metrics_fixture(int k) {
  const int w = 7, h = 5;
  RasterImage pred(w, h, 1), gt(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      const bool fg = (x + 2 * y + k) % 5 < 2;
      gt.at(x, y) = fg ? 1.0 : 0.0;
      pred.at(x, y) = fg ? (60 + (i * 37 + k * 53) % 150) / 255.0 : ((i * 29 + k * 17) % 120) / 255.0;
    }
  return {std::move(pred), std::move(gt)};
}

/// k x k box filter with edge clamping.
inline RasterImage box_blur(const RasterImage& map, int k) {
  RasterImage out(map.width(), map.height(), 1);
  const int r = k / 2;
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      double s = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          s += map.at(std::clamp(x + dx, 0, map.width() - 1), std::clamp(y + dy, 0, map.height() - 1));
      out.at(x, y) = s / (k * k);
    }
  return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("salreg_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * (i + j);
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= ra.size();
  mb /= rb.size();
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace salreg::testing
