#include "salreg/slic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "salreg/error.hpp"
#include "salreg/kernels.hpp"

namespace salreg {

namespace {

using kernels::SlicCenter;

struct Components {
  std::vector<int> id;         // per pixel
  std::vector<int> label;      // per component
  std::vector<int> size;       // per component
};

Components label_components(std::span<const int> labels, int width, int height) {
  Components c;
  c.id.assign(labels.size(), -1);
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(labels.size()); ++start) {
    if (c.id[start] >= 0) continue;
    const int comp = static_cast<int>(c.size.size());
    const int lab = labels[start];
    int count = 0;
    stack.push_back(start);
    c.id[start] = comp;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      ++count;
      const int x = i % width, y = i / width;
      const int nbr[4] = {x > 0 ? i - 1 : -1, x + 1 < width ? i + 1 : -1,
                          y > 0 ? i - width : -1, y + 1 < height ? i + width : -1};
      for (int j : nbr)
        if (j >= 0 && c.id[j] < 0 && labels[j] == lab) {
          c.id[j] = comp;
          stack.push_back(j);
        }
    }
    c.label.push_back(lab);
    c.size.push_back(count);
  }
  return c;
}

double gradient_at(const LabImage& img, int x, int y) {
  const int xl = std::max(x - 1, 0), xr = std::min(x + 1, img.width - 1);
  const int yu = std::max(y - 1, 0), yd = std::min(y + 1, img.height - 1);
  double g = 0;
  for (int c = 0; c < 3; ++c) {
    const double dx = img.at(xr, y)[c] - img.at(xl, y)[c];
    const double dy = img.at(x, yd)[c] - img.at(x, yu)[c];
    g += dx * dx + dy * dy;
  }
  return g;
}

std::vector<SlicCenter> initial_centers(const LabImage& img, int n_target) {
  const double aspect = static_cast<double>(img.width) / img.height;
  const int nx = std::clamp(static_cast<int>(std::ceil(std::sqrt(n_target * aspect))), 1,
                            std::min(img.width, n_target));
  const int ny = std::clamp(static_cast<int>(std::lround(static_cast<double>(n_target) / nx)), 1,
                            img.height);
  const double step_x = static_cast<double>(img.width) / nx;
  const double step_y = static_cast<double>(img.height) / ny;

  std::vector<SlicCenter> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      SlicCenter c;
      c.x = (i + 0.5) * step_x;
      c.y = (j + 0.5) * step_y;
      const int px = std::min(static_cast<int>(c.x), img.width - 1);
      const int py = std::min(static_cast<int>(c.y), img.height - 1);

      // Move to the lowest-gradient pixel of the 3x3 neighborhood, only on
      // a strict improvement so flat regions keep the exact grid position.
      double best = gradient_at(img, px, py);
      int bx = -1, by = -1;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = px + dx, qy = py + dy;
          if (qx < 0 || qy < 0 || qx >= img.width || qy >= img.height) continue;
          const double g = gradient_at(img, qx, qy);
          if (g < best) {
            best = g;
            bx = qx;
            by = qy;
          }
        }
      int cx = px, cy = py;
      if (bx >= 0) {
        c.x = bx + 0.5;
        c.y = by + 0.5;
        cx = bx;
        cy = by;
      }
      const auto& lab = img.at(cx, cy);
      c.l = lab[0];
      c.a = lab[1];
      c.b = lab[2];
      centers.push_back(c);
    }
  return centers;
}

}  // namespace

std::vector<int> enforce_connectivity(std::span<const int> labels, int width, int height,
                                      int* n_out) {
  const Components comps = label_components(labels, width, height);
  const int n_comp = static_cast<int>(comps.size.size());

  // Largest component per cluster survives; ties go to the earliest in raster order.
  int max_label = -1;
  for (int l : comps.label) max_label = std::max(max_label, l);
  std::vector<int> keeper(static_cast<std::size_t>(max_label + 1), -1);
  for (int c = 0; c < n_comp; ++c) {
    const int l = comps.label[c];
    if (l < 0) continue;
    if (keeper[l] < 0 || comps.size[c] > comps.size[keeper[l]]) keeper[l] = c;
  }

  // root[c] = keeper component c has been absorbed into (itself for keepers).
  std::vector<int> root(static_cast<std::size_t>(n_comp), -1);
  std::vector<long> region_size(static_cast<std::size_t>(n_comp), 0);
  for (int l = 0; l <= max_label; ++l)
    if (keeper[l] >= 0) {
      root[keeper[l]] = keeper[l];
      region_size[keeper[l]] = comps.size[keeper[l]];
    }

  std::vector<std::vector<int>> adjacent(static_cast<std::size_t>(n_comp));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const int i = y * width + x;
      const int a = comps.id[i];
      if (x + 1 < width && comps.id[i + 1] != a) {
        adjacent[a].push_back(comps.id[i + 1]);
        adjacent[comps.id[i + 1]].push_back(a);
      }
      if (y + 1 < height && comps.id[i + width] != a) {
        adjacent[a].push_back(comps.id[i + width]);
        adjacent[comps.id[i + width]].push_back(a);
      }
    }

  bool pending = true;
  while (pending) {
    pending = false;
    bool progressed = false;
    for (int c = 0; c < n_comp; ++c) {
      if (root[c] >= 0) continue;
      int target = -1;
      for (int nb : adjacent[c]) {
        const int r = root[nb];
        if (r < 0) continue;
        if (target < 0 || region_size[r] > region_size[target] ||
            (region_size[r] == region_size[target] && r < target))
          target = r;
      }
      if (target < 0) {
        pending = true;
        continue;
      }
      root[c] = target;
      region_size[target] += comps.size[c];
      progressed = true;
    }
    if (pending && !progressed) throw std::logic_error("connectivity enforcement stalled");
  }

  std::vector<int> remap(static_cast<std::size_t>(n_comp), -1);
  std::vector<int> out(labels.size());
  int next = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int r = root[comps.id[i]];
    if (remap[r] < 0) remap[r] = next++;
    out[i] = remap[r];
  }
  if (n_out) *n_out = next;
  return out;
}

std::vector<LabColor> superpixel_means(std::span<const int> labels, int n, const LabImage& image) {
  if (labels.size() != image.pixels.size()) throw ShapeError("label map does not cover image");
  // Deviations from each region's first pixel, so constant regions come out exact.
  std::vector<LabColor> ref(static_cast<std::size_t>(n), LabColor{0, 0, 0});
  std::vector<LabColor> sums(static_cast<std::size_t>(n), LabColor{0, 0, 0});
  std::vector<long> counts(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0 || l >= n) throw std::invalid_argument("label outside [0, n)");
    if (counts[l] == 0) ref[l] = image.pixels[i];
    for (int c = 0; c < 3; ++c) sums[l][c] += image.pixels[i][c] - ref[l][c];
    ++counts[l];
  }
  for (int l = 0; l < n; ++l)
    if (counts[l] > 0)
      for (int c = 0; c < 3; ++c) sums[l][c] = ref[l][c] + sums[l][c] / static_cast<double>(counts[l]);
  return sums;
}

SuperpixelSegmentation make_segmentation(std::vector<int> labels, int n, const LabImage& image) {
  SuperpixelSegmentation seg;
  seg.width = image.width;
  seg.height = image.height;
  seg.n = n;
  seg.features = superpixel_means(labels, n, image);
  seg.sizes.assign(static_cast<std::size_t>(n), 0);
  seg.boundary.assign(static_cast<std::size_t>(n), 0);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const int l = labels[static_cast<std::size_t>(y) * image.width + x];
      ++seg.sizes[l];
      if (x == 0 || y == 0 || x == image.width - 1 || y == image.height - 1) seg.boundary[l] = 1;
    }
  for (int l = 0; l < n; ++l)
    if (seg.sizes[l] == 0) throw std::invalid_argument("segmentation has an empty label");
  seg.labels = std::move(labels);
  return seg;
}

SuperpixelSegmentation oversegment(const LabImage& image, const SlicOptions& options) {
  const long pixels = static_cast<long>(image.width) * image.height;
  if (image.width < 1 || image.height < 1) throw ShapeError("empty image");
  if (options.n_target < 1 || options.n_target > pixels)
    throw std::invalid_argument("n_target must lie in [1, pixel count]");
  if (!(options.compactness > 0)) throw std::invalid_argument("compactness must be positive");

  const double step = std::sqrt(static_cast<double>(pixels) / options.n_target);
  std::vector<SlicCenter> centers = initial_centers(image, options.n_target);

  kernels::SlicAssignParams params;
  params.width = image.width;
  params.height = image.height;
  params.window = step;
  params.color_weight = 100.0 * 100.0;
  params.spatial_weight = (options.compactness / step) * (options.compactness / step);

  std::vector<int> labels(static_cast<std::size_t>(pixels), -1);
  std::vector<double> dist(static_cast<std::size_t>(pixels));
  std::vector<double> acc;
  std::vector<long> counts;
  for (int iter = 0; iter < options.iterations; ++iter) {
    if (options.parallel)
      kernels::omp::slic_assign(image.pixels, centers, params, labels, dist);
    else
      kernels::serial::slic_assign(image.pixels, centers, params, labels, dist);

    acc.assign(centers.size() * 5, 0.0);
    counts.assign(centers.size(), 0);
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * image.width + x;
        const int k = labels[i];
        if (k < 0) continue;
        double* a = &acc[static_cast<std::size_t>(k) * 5];
        a[0] += image.pixels[i][0];
        a[1] += image.pixels[i][1];
        a[2] += image.pixels[i][2];
        a[3] += x + 0.5;
        a[4] += y + 0.5;
        ++counts[k];
      }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[k]);
      const double* a = &acc[k * 5];
      centers[k] = {a[0] * inv, a[1] * inv, a[2] * inv, a[3] * inv, a[4] * inv};
    }
  }

  int n = 0;
  std::vector<int> connected = enforce_connectivity(labels, image.width, image.height, &n);
  return make_segmentation(std::move(connected), n, image);
}

std::size_t boundary_length(std::span<const int> labels, int width, int height) {
  std::size_t total = 0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (x + 1 < width && labels[i] != labels[i + 1]) ++total;
      if (y + 1 < height && labels[i] != labels[i + width]) ++total;
    }
  return total;
}

std::vector<int> component_counts(std::span<const int> labels, int width, int height, int n) {
  const Components comps = label_components(labels, width, height);
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  for (int l : comps.label)
    if (l >= 0 && l < n) ++counts[l];
  return counts;
}

}  // namespace salreg
