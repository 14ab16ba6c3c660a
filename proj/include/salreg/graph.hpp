#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "salreg/image.hpp"

namespace salreg {

/// Superpixel graph: adjacency-masked RBF affinities `w`, the full RBF Gram
/// matrix `k` over all pairs, and the unnormalized Laplacian `l = D - W`.
struct SuperpixelGraph {
  int n = 0;
  double rho = 0.1;
  std::vector<LabColor> features;
  Eigen::MatrixXd w;
  Eigen::MatrixXd k;
  Eigen::MatrixXd l;
};

using RegionPair = std::pair<int, int>;  // always first < second

/// exp(-||xi - xj||^2 / rho). Throws on non-finite input or rho <= 0.
double rbf_kernel(std::span<const double> xi, std::span<const double> xj, double rho);
double rbf_kernel(const LabColor& xi, const LabColor& xj, double rho);

/// Sorted, de-duplicated pairs of 4-adjacent regions.
std::vector<RegionPair> build_adjacency(std::span<const int> labels, int width, int height);

SuperpixelGraph build_graph(std::span<const LabColor> features,
                            std::span<const RegionPair> adjacency, double rho,
                            bool parallel = true);

/// Writes w.csv, k.csv and l.csv into `dir`.
void dump_graph_csv(const SuperpixelGraph& graph, const std::filesystem::path& dir);

}  // namespace salreg
