// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "salreg/image.hpp"
#include "salreg/kernels.hpp"

using namespace salreg;
using namespace salreg::kernels;

namespace {

std::vector<std::array<double, 3>> random_lab(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::array<double, 3>> v(n);
  for (auto& p : v) p = {u(rng), u(rng), u(rng)};
  return v;
}

struct SlicInput {
  int side;
  std::vector<std::array<double, 3>> pixels;
  std::vector<SlicCenter> centers;
  SlicAssignParams params;
};

SlicInput slic_input(int side, int n) {
  SlicInput in{side, random_lab(static_cast<std::size_t>(side) * side, 1), {}, {}};
  const int g = static_cast<int>(std::sqrt(n));
  const double step = static_cast<double>(side) / g;
  for (int j = 0; j < g; ++j)
    for (int i = 0; i < g; ++i) in.centers.push_back({0.5, 0.5, 0.5, (i + 0.5) * step, (j + 0.5) * step});
  in.params = {side, side, step, 1e4, std::pow(10.0 / step, 2)};
  return in;
}

template <auto Fn>
void BM_slic_assign(benchmark::State& state) {
  const auto in = slic_input(static_cast<int>(state.range(0)), 196);
  std::vector<int> labels(in.pixels.size());
  std::vector<double> dist(in.pixels.size());
  for (auto _ : state) {
    Fn(in.pixels, in.centers, in.params, labels, dist);
    benchmark::DoNotOptimize(labels.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.pixels.size()));
}

template <auto Fn>
void BM_gram(benchmark::State& state) {
  const auto f = random_lab(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(f, 0.1));
}

template <auto Fn>
void BM_conv(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const Conv2dShape s{4, 8, side, side, 12, 3};
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<double> in(static_cast<std::size_t>(s.batch) * s.in_channels * side * side);
  std::vector<double> w(static_cast<std::size_t>(s.out_channels) * s.in_channels * 9), b(s.out_channels);
  for (double& v : in) v = nd(rng);
  for (double& v : w) v = nd(rng);
  std::vector<double> out(static_cast<std::size_t>(s.batch) * s.out_channels * side * side);
  for (auto _ : state) {
    Fn(s, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Fn>
void BM_histogram(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(n);
  std::vector<std::uint8_t> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = u(rng);
    t[i] = u(rng) < 0.3;
  }
  for (auto _ : state) benchmark::DoNotOptimize(Fn(v, t));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(BM_slic_assign<serial::slic_assign>)->Name("slic_assign/serial")->Arg(250)->Arg(500);
BENCHMARK(BM_slic_assign<omp::slic_assign>)->Name("slic_assign/omp")->Arg(250)->Arg(500);
BENCHMARK(BM_gram<serial::gram_matrix>)->Name("gram/serial")->Arg(200)->Arg(800);
BENCHMARK(BM_gram<omp::gram_matrix>)->Name("gram/omp")->Arg(200)->Arg(800);
BENCHMARK(BM_conv<serial::conv2d_forward>)->Name("conv3x3/serial")->Arg(16)->Arg(64);
BENCHMARK(BM_conv<omp::conv2d_forward>)->Name("conv3x3/omp")->Arg(16)->Arg(64);
BENCHMARK(BM_histogram<serial::level_histogram>)->Name("level_histogram/serial")->Arg(250000);
BENCHMARK(BM_histogram<omp::level_histogram>)->Name("level_histogram/omp")->Arg(250000);

BENCHMARK_MAIN();
