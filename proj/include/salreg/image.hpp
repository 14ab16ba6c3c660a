#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace salreg {

/// Row-major pixel grid with 1 (gray) or 3 (RGB) interleaved channels,
/// intensities in [0,1].
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels, double fill = 0.0);
  /// Takes ownership of `data`; throws ShapeError on a length mismatch and
  /// std::invalid_argument on values outside [0,1] or non-finite.
  RasterImage(int width, int height, int channels, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  double at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }
  double& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const RasterImage&) const = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// CIELab image with channels rescaled to [0,1]: L/100, (a+128)/255, (b+128)/255.
struct LabImage {
  int width = 0;
  int height = 0;
  std::vector<std::array<double, 3>> pixels;  // row-major

  const std::array<double, 3>& at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

using LabColor = std::array<double, 3>;

// --- PNM I/O --------------------------------------------------------------

/// Parses binary P5/P6 with maxval 255 or 65535. Errors raise ParseError
/// naming the byte offset.
RasterImage parse_pnm(std::span<const std::uint8_t> bytes);
RasterImage read_pnm(const std::filesystem::path& path);

/// Writes a single-channel map as P5 at 8 or 16 bits per sample.
void write_pgm(const RasterImage& map, const std::filesystem::path& path, int depth = 8);
/// Writes P5 or P6 depending on channel count.
void write_pnm(const RasterImage& image, const std::filesystem::path& path, int depth = 8);
std::vector<std::uint8_t> encode_pnm(const RasterImage& image, int depth);

/// Label maps are stored as 16-bit P5 with gray level = label.
void write_label_pgm(std::span<const int> labels, int width, int height,
                     const std::filesystem::path& path);
std::vector<int> read_label_pgm(const std::filesystem::path& path, int* width, int* height);

// --- Color -----------------------------------------------------------------

/// Raw CIELab (L in [0,100]) of one sRGB pixel, D65 white.
LabColor srgb_to_lab_raw(double r, double g, double b) noexcept;
LabColor normalize_lab(const LabColor& raw) noexcept;
LabImage srgb_to_lab(const RasterImage& image);

/// Bilinear resize with corner-aligned sampling: output pixel i maps to
/// source coordinate i*(n_in-1)/(n_out-1); a single output row/column
/// samples the source center.
RasterImage resize_bilinear(const RasterImage& image, int new_width, int new_height);

}  // namespace salreg
