#include <algorithm>
#include <cmath>
#include <limits>

#include "salreg/kernels.hpp"

namespace salreg::kernels::serial {

void slic_assign(LabPixels pixels, std::span<const SlicCenter> centers,
                 const SlicAssignParams& p, std::span<int> labels, std::span<double> dist) {
  std::fill(labels.begin(), labels.end(), -1);
  std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const SlicCenter& c = centers[k];
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x - p.window - 0.5)));
    const int x1 = std::min(p.width - 1, static_cast<int>(std::ceil(c.x + p.window - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y - p.window - 0.5)));
    const int y1 = std::min(p.height - 1, static_cast<int>(std::ceil(c.y + p.window - 0.5)));
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        if (!in_window(px, py, c, p.window)) continue;
        const std::size_t i = static_cast<std::size_t>(y) * p.width + x;
        const double d = slic_distance(pixels[i], px, py, c, p);
        if (d < dist[i]) {
          dist[i] = d;
          labels[i] = static_cast<int>(k);
        }
      }
    }
  }
}

Eigen::MatrixXd gram_matrix(std::span<const std::array<double, 3>> features, double rho) {
  const auto n = static_cast<Eigen::Index>(features.size());
  Eigen::MatrixXd k(n, n);
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
  for (int n = 0; n < s.batch; ++n) {
    for (int o = 0; o < s.out_channels; ++o) {
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
}

LevelHistogram level_histogram(std::span<const double> values,
                               std::span<const std::uint8_t> truth) {
  LevelHistogram h;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int level = quantize_level(values[i]);
    if (truth[i])
      ++h.foreground[level];
    else
      ++h.background[level];
  }
  return h;
}

}  // namespace salreg::kernels::serial
