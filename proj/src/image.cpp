#include "salreg/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "salreg/error.hpp"

namespace salreg {

RasterImage::RasterImage(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 1 || height < 1) throw ShapeError("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw ShapeError("image must have 1 or 3 channels");
  if (!(fill >= 0.0 && fill <= 1.0)) throw std::invalid_argument("fill value outside [0,1]");
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

RasterImage::RasterImage(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width < 1 || height < 1) throw ShapeError("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw ShapeError("image must have 1 or 3 channels");
  if (data_.size() != pixel_count() * static_cast<std::size_t>(channels))
    throw ShapeError("pixel buffer length does not match width*height*channels");
  for (double v : data_)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("pixel value outside [0,1]");
}

// --- PNM -------------------------------------------------------------------

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    bool any = false;
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
        any = true;
      } else if (std::isspace(c)) {
        ++pos_;
        any = true;
      } else {
        break;
      }
    }
    if (!any) throw ParseError("expected whitespace in PNM header", pos_);
  }

  long read_uint() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000) throw ParseError("header integer too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError("expected integer in PNM header", start);
    return value;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

RasterImage parse_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw ParseError("missing PNM magic", 0);
  int channels = 0;
  if (bytes[1] == '5') {
    channels = 1;
  } else if (bytes[1] == '6') {
    channels = 3;
  } else {
    throw ParseError("unsupported PNM magic (only P5 and P6)", 1);
  }

  HeaderReader header(bytes);
  const long width = header.read_uint();
  const long height = header.read_uint();
  const std::size_t maxval_offset = header.pos();
  const long maxval = header.read_uint();
  if (width < 1 || height < 1) throw ParseError("zero image dimension", maxval_offset);
  if (maxval != 255 && maxval != 65535)
    throw ParseError("unsupported maxval " + std::to_string(maxval), maxval_offset);
  if (header.pos() >= bytes.size() || !std::isspace(bytes[header.pos()]))
    throw ParseError("expected single whitespace after maxval", header.pos());
  const std::size_t body = header.pos() + 1;

  const std::size_t sample_bytes = maxval == 255 ? 1 : 2;
  const std::size_t samples = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - body < samples * sample_bytes)
    throw ParseError("truncated PNM body: expected " + std::to_string(samples * sample_bytes) +
                         " bytes",
                     bytes.size());

  std::vector<double> data(samples);
  const double scale = 1.0 / static_cast<double>(maxval);
  const std::uint8_t* p = bytes.data() + body;
  for (std::size_t i = 0; i < samples; ++i) {
    unsigned v = sample_bytes == 1 ? p[i] : (unsigned{p[2 * i]} << 8) | p[2 * i + 1];
    data[i] = std::min(1.0, v * scale);
  }
  return RasterImage(static_cast<int>(width), static_cast<int>(height), channels, std::move(data));
}

RasterImage read_pnm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return parse_pnm(bytes);
}

std::vector<std::uint8_t> encode_pnm(const RasterImage& image, int depth) {
  if (depth != 8 && depth != 16) throw std::invalid_argument("PNM depth must be 8 or 16");
  const unsigned maxval = depth == 8 ? 255u : 65535u;
  const std::string header = std::string(image.channels() == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n" + std::to_string(maxval) +
                             "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + image.data().size() * (depth / 8));
  for (double v : image.data()) {
    const auto level = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
    if (depth == 16) out.push_back(static_cast<std::uint8_t>(level >> 8));
    out.push_back(static_cast<std::uint8_t>(level & 0xff));
  }
  return out;
}

void write_pgm(const RasterImage& map, const std::filesystem::path& path, int depth) {
  if (map.channels() != 1) throw ShapeError("write_pgm requires a single-channel map");
  spit(path, encode_pnm(map, depth));
}

void write_pnm(const RasterImage& image, const std::filesystem::path& path, int depth) {
  spit(path, encode_pnm(image, depth));
}

void write_label_pgm(std::span<const int> labels, int width, int height,
                     const std::filesystem::path& path) {
  if (labels.size() != static_cast<std::size_t>(width) * height)
    throw ShapeError("label map length does not match dimensions");
  const std::string header =
      "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (int label : labels) {
    if (label < 0 || label > 65535) throw std::invalid_argument("label out of 16-bit range");
    out.push_back(static_cast<std::uint8_t>(label >> 8));
    out.push_back(static_cast<std::uint8_t>(label & 0xff));
  }
  spit(path, out);
}

std::vector<int> read_label_pgm(const std::filesystem::path& path, int* width, int* height) {
  const auto image = read_pnm(path);
  if (image.channels() != 1) throw ShapeError("label map must be single-channel");
  std::vector<int> labels(image.pixel_count());
  // Assumes a 16-bit map; 8-bit maps are rescaled onto the same grid and stay exact.
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i] = static_cast<int>(std::lround(image.data()[i] * 65535.0));
  if (width) *width = image.width();
  if (height) *height = image.height();
  return labels;
}

// --- Color -----------------------------------------------------------------

namespace {

double srgb_linearize(double c) noexcept {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) noexcept {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

LabColor srgb_to_lab_raw(double r, double g, double b) noexcept {
  r = srgb_linearize(r);
  g = srgb_linearize(g);
  b = srgb_linearize(b);
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / 0.95047);
  const double fy = lab_f(y / 1.00000);
  const double fz = lab_f(z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabColor normalize_lab(const LabColor& raw) noexcept {
  return {std::clamp(raw[0] / 100.0, 0.0, 1.0), std::clamp((raw[1] + 128.0) / 255.0, 0.0, 1.0),
          std::clamp((raw[2] + 128.0) / 255.0, 0.0, 1.0)};
}

LabImage srgb_to_lab(const RasterImage& image) {
  if (image.channels() != 3) throw ShapeError("srgb_to_lab requires a 3-channel image");
  LabImage lab;
  lab.width = image.width();
  lab.height = image.height();
  lab.pixels.resize(image.pixel_count());
  const auto src = image.data();
  const auto n = static_cast<std::ptrdiff_t>(lab.pixels.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    lab.pixels[i] = normalize_lab(srgb_to_lab_raw(src[3 * i], src[3 * i + 1], src[3 * i + 2]));
  return lab;
}

RasterImage resize_bilinear(const RasterImage& image, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) throw ShapeError("resize target must be at least 1x1");
  if (new_width == image.width() && new_height == image.height()) return image;

  auto coord = [](int i, int n_out, int n_in) {
    if (n_out == 1) return 0.5 * (n_in - 1);
    return static_cast<double>(i) * (n_in - 1) / (n_out - 1);
  };

  const int channels = image.channels();
  std::vector<double> out(static_cast<std::size_t>(new_width) * new_height * channels);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < new_height; ++y) {
    const double sy = coord(y, new_height, image.height());
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double fy = sy - y0;
    for (int x = 0; x < new_width; ++x) {
      const double sx = coord(x, new_width, image.width());
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double fx = sx - x0;
      for (int c = 0; c < channels; ++c) {
        const double top = (1 - fx) * image.at(x0, y0, c) + fx * image.at(x1, y0, c);
        const double bot = (1 - fx) * image.at(x0, y1, c) + fx * image.at(x1, y1, c);
        out[(static_cast<std::size_t>(y) * new_width + x) * channels + c] =
            std::clamp((1 - fy) * top + fy * bot, 0.0, 1.0);
      }
    }
  }
  return RasterImage(new_width, new_height, channels, std::move(out));
}

}  // namespace salreg
