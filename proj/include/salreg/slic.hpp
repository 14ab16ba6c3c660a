#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "salreg/image.hpp"

namespace salreg {

/// Pixel-to-superpixel partition with per-region normalized-Lab means.
///
/// Labels are compact in [0, n) and numbered by first appearance in a
/// raster scan. Every region is non-empty and 4-connected.
struct SuperpixelSegmentation {
  int width = 0;
  int height = 0;
  int n = 0;
  std::vector<int> labels;
  std::vector<LabColor> features;
  std::vector<int> sizes;
  std::vector<std::uint8_t> boundary;  // 1 iff the region touches the image border
};

struct SlicOptions {
  int n_target = 200;
  double compactness = 10.0;
  std::uint64_t seed = 42;  // the clustering is fully deterministic; kept for config symmetry
  int iterations = 10;
  bool parallel = true;  // use the OpenMP assignment kernel
};

/// SLIC k-means in (L,a,b,x,y): grid-initialized centers moved to the
/// lowest-gradient pixel of their 3x3 neighborhood, `iterations` rounds of
/// windowed assignment and center update, then connectivity enforcement.
///
/// Color distance is measured on the normalized Lab channels scaled back
/// by 100, so `compactness` has its usual meaning (10 ~ balanced).
SuperpixelSegmentation oversegment(const LabImage& image, const SlicOptions& options);

/// Arithmetic mean of the normalized Lab channels per label.
std::vector<LabColor> superpixel_means(std::span<const int> labels, int n, const LabImage& image);

/// Builds sizes, features and boundary flags for a label map whose labels
/// are already compact in [0, n).
SuperpixelSegmentation make_segmentation(std::vector<int> labels, int n, const LabImage& image);

/// Relabels so that every region is 4-connected: each cluster keeps its
/// largest component, every other component (and any unassigned pixel,
/// label -1) joins the largest adjacent kept region, ties to the smaller
/// label. Returns compact labels in raster first-appearance order.
std::vector<int> enforce_connectivity(std::span<const int> labels, int width, int height,
                                      int* n_out);

/// Number of 4-neighbor pixel pairs whose labels differ.
std::size_t boundary_length(std::span<const int> labels, int width, int height);

/// Count of 4-connected components per label (1 everywhere for a valid segmentation).
std::vector<int> component_counts(std::span<const int> labels, int width, int height, int n);

}  // namespace salreg
