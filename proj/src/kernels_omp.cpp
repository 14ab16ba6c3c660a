#include <algorithm>
#include <cmath>
#include <limits>

#include "salreg/kernels.hpp"

namespace salreg::kernels::omp {

// Pixel-parallel formulation: centers are bucketed on a grid of cell size
// S, so every center whose window covers a pixel lies in the pixel's cell
// or one of its 8 neighbors.
void slic_assign(LabPixels pixels, std::span<const SlicCenter> centers,
                 const SlicAssignParams& p, std::span<int> labels, std::span<double> dist) {
  const double cell = p.window;
  const int gx = static_cast<int>(std::ceil(p.width / cell)) + 1;
  const int gy = static_cast<int>(std::ceil(p.height / cell)) + 1;
  auto cell_of = [cell](double v, int limit) {
    return std::clamp(static_cast<int>(std::floor(v / cell)), 0, limit - 1);
  };
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(gx) * gy);
  for (std::size_t k = 0; k < centers.size(); ++k)
    buckets[static_cast<std::size_t>(cell_of(centers[k].y, gy)) * gx + cell_of(centers[k].x, gx)]
        .push_back(static_cast<int>(k));

#pragma omp parallel
  {
    std::vector<int> candidates;
#pragma omp for schedule(static)
    for (int y = 0; y < p.height; ++y) {
      const double py = y + 0.5;
      const int cy = cell_of(py, gy);
      int last_cx = -1;
      for (int x = 0; x < p.width; ++x) {
        const double px = x + 0.5;
        const int cx = cell_of(px, gx);
        if (cx != last_cx) {
          candidates.clear();
          for (int by = std::max(0, cy - 1); by <= std::min(gy - 1, cy + 1); ++by)
            for (int bx = std::max(0, cx - 1); bx <= std::min(gx - 1, cx + 1); ++bx) {
              const auto& b = buckets[static_cast<std::size_t>(by) * gx + bx];
              candidates.insert(candidates.end(), b.begin(), b.end());
            }
          std::sort(candidates.begin(), candidates.end());
          last_cx = cx;
        }
        const std::size_t i = static_cast<std::size_t>(y) * p.width + x;
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int k : candidates) {
          const SlicCenter& c = centers[k];
          if (!in_window(px, py, c, p.window)) continue;
          const double d = slic_distance(pixels[i], px, py, c, p);
          if (d < best_d) {
            best_d = d;
            best = k;
          }
        }
        labels[i] = best;
        dist[i] = best_d;
      }
    }
  }
}

Eigen::MatrixXd gram_matrix(std::span<const std::array<double, 3>> features, double rho) {
  const auto n = static_cast<Eigen::Index>(features.size());
  Eigen::MatrixXd k(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d2 = 0;
      for (int c = 0; c < 3; ++c) {
        const double d = features[i][c] - features[j][c];
        d2 += d * d;
      }
      k(i, j) = k(j, i) = std::exp(-d2 / rho);
    }
  }
  return k;
}

void conv2d_forward(const Conv2dShape& s, std::span<const double> input,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> output) {
  const int pad = s.kernel / 2;
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  const int jobs = s.batch * s.out_channels;
#pragma omp parallel for schedule(static)
  for (int job = 0; job < jobs; ++job) {
    const int n = job / s.out_channels;
    const int o = job % s.out_channels;
    double* out = output.data() + (static_cast<std::size_t>(n) * s.out_channels + o) * plane;
    std::fill(out, out + plane, bias[o]);
    for (int ci = 0; ci < s.in_channels; ++ci) {
      const double* in = input.data() + (static_cast<std::size_t>(n) * s.in_channels + ci) * plane;
      const double* w =
          weight.data() + (static_cast<std::size_t>(o) * s.in_channels + ci) * s.kernel * s.kernel;
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
          double acc = 0;
          for (int ky = 0; ky < s.kernel; ++ky) {
            const int iy = y + ky - pad;
            if (iy < 0 || iy >= s.height) continue;
            for (int kx = 0; kx < s.kernel; ++kx) {
              const int ix = x + kx - pad;
              if (ix < 0 || ix >= s.width) continue;
              acc += w[ky * s.kernel + kx] * in[static_cast<std::size_t>(iy) * s.width + ix];
            }
          }
          out[static_cast<std::size_t>(y) * s.width + x] += acc;
        }
    }
  }
}

LevelHistogram level_histogram(std::span<const double> values,
                               std::span<const std::uint8_t> truth) {
  LevelHistogram total;
  const auto n = static_cast<std::ptrdiff_t>(values.size());
#pragma omp parallel
  {
    LevelHistogram local;
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const int level = quantize_level(values[i]);
      if (truth[i])
        ++local.foreground[level];
      else
        ++local.background[level];
    }
#pragma omp critical
    for (int l = 0; l < 256; ++l) {
      total.foreground[l] += local.foreground[l];
      total.background[l] += local.background[l];
    }
  }
  return total;
}

}  // namespace salreg::kernels::omp
