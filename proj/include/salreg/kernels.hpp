#pragma once

// Data-parallel inner loops. Every kernel has a straightforward serial
// reference and an OpenMP version; the two must agree bit for bit (the
// OpenMP versions only reorder independent work, never a reduction over
// floating point). Tests compare them and bench/ times them.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace salreg::kernels {

/// SLIC cluster center in (L,a,b,x,y); x,y in pixel-center coordinates
/// (pixel (i,j) is centered at (i+0.5, j+0.5)).
struct SlicCenter {
  double l = 0, a = 0, b = 0, x = 0, y = 0;
};

struct SlicAssignParams {
  int width = 0;
  int height = 0;
  double window = 0;          // half-width S of the 2S x 2S search window
  double color_weight = 0;    // multiplies squared Lab distance
  double spatial_weight = 0;  // multiplies squared pixel distance
};

/// One SLIC assignment sweep. labels/dist are overwritten for every pixel
/// covered by some window; uncovered pixels keep label -1 and infinite
/// distance. Ties go to the lowest center index.
using LabPixels = std::span<const std::array<double, 3>>;

struct Conv2dShape {
  int batch = 0, in_channels = 0, height = 0, width = 0;
  int out_channels = 0, kernel = 0;  // square kernel, "same" zero padding
};

struct LevelHistogram {
  std::array<std::uint64_t, 256> foreground{};
  std::array<std::uint64_t, 256> background{};
};

namespace serial {

void slic_assign(LabPixels pixels, std::span<const SlicCenter> centers,
                 const SlicAssignParams& p, std::span<int> labels, std::span<double> dist);

Eigen::MatrixXd gram_matrix(std::span<const std::array<double, 3>> features, double rho);

void conv2d_forward(const Conv2dShape& s, std::span<const double> input,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> output);

/// Quantizes each value to round(v*255) and counts it per ground-truth side.
LevelHistogram level_histogram(std::span<const double> values, std::span<const std::uint8_t> truth);

}  // namespace serial

namespace omp {

void slic_assign(LabPixels pixels, std::span<const SlicCenter> centers,
                 const SlicAssignParams& p, std::span<int> labels, std::span<double> dist);

Eigen::MatrixXd gram_matrix(std::span<const std::array<double, 3>> features, double rho);

void conv2d_forward(const Conv2dShape& s, std::span<const double> input,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> output);

LevelHistogram level_histogram(std::span<const double> values, std::span<const std::uint8_t> truth);

}  // namespace omp

/// Squared-distance expression shared by both SLIC variants so results match exactly.
inline double slic_distance(const std::array<double, 3>& lab, double px, double py,
                            const SlicCenter& c, const SlicAssignParams& p) noexcept {
  const double dl = lab[0] - c.l, da = lab[1] - c.a, db = lab[2] - c.b;
  const double dx = px - c.x, dy = py - c.y;
  return p.color_weight * (dl * dl + da * da + db * db) + p.spatial_weight * (dx * dx + dy * dy);
}

inline bool in_window(double px, double py, const SlicCenter& c, double window) noexcept {
  return px - c.x <= window && c.x - px <= window && py - c.y <= window && c.y - py <= window;
}

inline int quantize_level(double v) noexcept {
  const double s = v * 255.0 + 0.5;
  return s <= 0.0 ? 0 : (s >= 255.0 ? 255 : static_cast<int>(s));
}

}  // namespace salreg::kernels
