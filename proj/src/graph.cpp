#include "salreg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "salreg/error.hpp"
#include "salreg/kernels.hpp"

namespace salreg {

double rbf_kernel(std::span<const double> xi, std::span<const double> xj, double rho) {
  if (xi.size() != xj.size()) throw ShapeError("rbf_kernel: feature dimensions differ");
  if (!(rho > 0) || !std::isfinite(rho)) throw std::invalid_argument("rbf_kernel: rho must be > 0");
  double d2 = 0;
  for (std::size_t c = 0; c < xi.size(); ++c) {
    if (!std::isfinite(xi[c]) || !std::isfinite(xj[c]))
      throw std::invalid_argument("rbf_kernel: non-finite feature");
    const double d = xi[c] - xj[c];
    d2 += d * d;
  }
  return std::exp(-d2 / rho);
}

double rbf_kernel(const LabColor& xi, const LabColor& xj, double rho) {
  return rbf_kernel(std::span<const double>(xi), std::span<const double>(xj), rho);
}

std::vector<RegionPair> build_adjacency(std::span<const int> labels, int width, int height) {
  std::vector<RegionPair> pairs;
  auto add = [&pairs](int a, int b) {
    if (a != b) pairs.emplace_back(std::min(a, b), std::max(a, b));
  };
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (x + 1 < width) add(labels[i], labels[i + 1]);
      if (y + 1 < height) add(labels[i], labels[i + width]);
    }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

SuperpixelGraph build_graph(std::span<const LabColor> features,
                            std::span<const RegionPair> adjacency, double rho, bool parallel) {
  if (!(rho > 0) || !std::isfinite(rho)) throw std::invalid_argument("build_graph: rho must be > 0");
  for (const auto& f : features)
    for (double v : f)
      if (!std::isfinite(v)) throw std::invalid_argument("build_graph: non-finite feature");

  SuperpixelGraph g;
  g.n = static_cast<int>(features.size());
  g.rho = rho;
  g.features.assign(features.begin(), features.end());
  g.k = parallel ? kernels::omp::gram_matrix(features, rho)
                 : kernels::serial::gram_matrix(features, rho);

  g.w = Eigen::MatrixXd::Zero(g.n, g.n);
  for (const auto& [i, j] : adjacency) {
    if (i < 0 || j >= g.n || i == j) throw std::invalid_argument("build_graph: bad adjacency pair");
    g.w(i, j) = g.w(j, i) = g.k(i, j);
  }
  g.l = -g.w;
  for (int i = 0; i < g.n; ++i) g.l(i, i) = g.w.row(i).sum();
  return g;
}

namespace {

void write_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

}  // namespace

void dump_graph_csv(const SuperpixelGraph& graph, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_matrix(graph.w, dir / "w.csv");
  write_matrix(graph.k, dir / "k.csv");
  write_matrix(graph.l, dir / "l.csv");
}

}  // namespace salreg
