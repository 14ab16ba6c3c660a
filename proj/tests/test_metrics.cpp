#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "salreg/metrics.hpp"
#include "support.hpp"

using namespace salreg;
using namespace salreg::metrics;

namespace {

RasterImage gray(int w, int h, std::vector<double> v) { return RasterImage(w, h, 1, std::move(v)); }

BinaryMask mask(int w, int h, std::vector<std::uint8_t> bits) { return {w, h, std::move(bits)}; }

std::vector<NamedPair> fixture_pairs() {
  std::vector<NamedPair> pairs;
  for (int k = 0; k < 3; ++k) {
    auto f = testing::metrics_fixture(k);
    pairs.push_back({"img" + std::to_string(k), std::move(f.prediction), std::move(f.truth)});
  }
  return pairs;
}

}  // namespace

TEST_CASE("binarize") {
  const auto map = gray(2, 2, {0.5, 0.1, 1.0, 0.0});
  CHECK(binarize(map, 255).count() == 0);
  CHECK(binarize(gray(2, 1, {0.2, 0.3}), 50).count() == 2);
  CHECK(binarize(gray(1, 1, {0.5}), 127).count() == 1);
  CHECK(binarize(gray(1, 1, {0.5}), 128).count() == 0);
  CHECK(binarize(map, 0).bits == std::vector<std::uint8_t>{1, 1, 1, 0});
}

TEST_CASE("ground truth mask thresholds gray level above 127") {
  CHECK(ground_truth_mask(gray(3, 1, {127 / 255.0, 128 / 255.0, 1.0})).bits ==
        std::vector<std::uint8_t>{0, 1, 1});
  RasterImage color(1, 1, 3, std::vector<double>{1.0, 1.0, 0.0});
  CHECK(ground_truth_mask(color).count() == 1);
}

TEST_CASE("precision_recall") {
  const auto g = mask(2, 2, {1, 0, 0, 0});
  const auto pr = precision_recall(g, g);
  CHECK(pr.precision == 1.0);
  CHECK(pr.recall == 1.0);
  const auto all = precision_recall(mask(2, 2, {1, 1, 1, 1}), g);
  CHECK(all.precision == 0.25);
  CHECK(all.recall == 1.0);
  const auto disjoint = precision_recall(mask(2, 2, {0, 1, 1, 0}), g);
  CHECK(disjoint.precision == 0.0);
  CHECK(disjoint.recall == 0.0);
  CHECK(precision_recall(mask(2, 2, {0, 0, 0, 0}), g).precision == 1.0);
  CHECK_THROWS(precision_recall(g, mask(2, 2, {0, 0, 0, 0})));
  CHECK_THROWS(precision_recall(mask(1, 1, {1}), g));
}

TEST_CASE("roc_point") {
  const auto g = mask(4, 1, {1, 1, 0, 0});
  const auto none = roc_point(mask(4, 1, {0, 0, 0, 0}), g);
  CHECK(none.fpr == 0.0);
  CHECK(none.tpr == 0.0);
  const auto full = roc_point(mask(4, 1, {1, 1, 1, 1}), g);
  CHECK(full.fpr == 1.0);
  CHECK(full.tpr == 1.0);
  const auto half = roc_point(mask(4, 1, {1, 0, 1, 0}), g);
  CHECK(half.fpr == 0.5);
  CHECK(half.tpr == 0.5);
  CHECK_THROWS(roc_point(g, mask(4, 1, {0, 0, 0, 0})));
  CHECK_THROWS(roc_point(g, mask(4, 1, {1, 1, 1, 1})));
}

TEST_CASE("f_measure") {
  CHECK(f_measure(1, 1) == 1.0);
  CHECK(f_measure(0.7, 0) == 0.0);
  CHECK(f_measure(0, 0) == 0.0);
  CHECK(f_measure(0.8, 0.6) == doctest::Approx(0.742857).epsilon(1e-6));
  CHECK(f_measure(0.8, 0.6) == doctest::Approx(1.3 * 0.48 / 0.84).epsilon(1e-15));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1e-6, 1);
  for (int t = 0; t < 1000; ++t) {
    const double p = u(rng), r = u(rng);
    const double f = f_measure(p, r);
    CHECK(f >= std::min(p, r) - 1e-15);
    CHECK(f <= std::max(p, r) + 1e-15);
  }
}

TEST_CASE("adaptive_threshold") {
  CHECK(adaptive_threshold(gray(2, 1, {0.2, 0.4})) == 153);
  CHECK(adaptive_threshold(gray(2, 1, {0.0, 0.0})) == 0);
  CHECK(adaptive_threshold(gray(2, 1, {0.5, 0.5})) == 255);
  CHECK(adaptive_threshold(gray(2, 1, {0.9, 0.6})) == 255);
}

TEST_CASE("curves and AUC examples") {
  const auto truth = gray(4, 1, {1, 0, 1, 0});
  const auto g = ground_truth_mask(truth);
  CHECK(curves(truth, g).auc == 1.0);
  CHECK(curves(gray(4, 1, {0, 1, 0, 1}), g).auc == 0.0);
  // Brute force over all thresholds gives 3/4 for this ranking.
  CHECK(curves(gray(4, 1, {0.9, 0.6, 0.4, 0.1}), g).auc == doctest::Approx(0.75).epsilon(1e-15));
  const auto c = curves(gray(4, 1, {0.9, 0.6, 0.4, 0.1}), g);
  for (int t = 0; t < 256; ++t) {
    CHECK(c.pr[t].threshold == t);
    CHECK(c.roc[t].threshold == t);
  }
}

TEST_CASE("curves agree with per-threshold binarization") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto map = testing::random_image(13, 11, 1, seed);
    const auto truth = testing::box_blur(testing::random_image(13, 11, 1, seed + 50), 3);
    const auto g = ground_truth_mask(truth);
    if (g.count() == 0 || g.count() == g.bits.size()) continue;
    const auto c = curves(map, g, seed % 2 == 0);
    for (int t = 0; t < 256; t += 7) {
      const auto m = binarize(map, t);
      const auto pr = precision_recall(m, g);
      const auto roc = roc_point(m, g);
      CHECK(c.pr[t].precision == pr.precision);
      CHECK(c.pr[t].recall == pr.recall);
      CHECK(c.roc[t].fpr == roc.fpr);
      CHECK(c.roc[t].tpr == roc.tpr);
    }
  }
}

TEST_CASE("curve properties") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto map = testing::random_image(20, 20, 1, 100 + seed);
    const auto g = ground_truth_mask(testing::box_blur(testing::random_image(20, 20, 1, 200 + seed), 5));
    if (g.count() == 0 || g.count() == g.bits.size()) continue;
    const auto c = curves(map, g);
    for (int t = 1; t < 256; ++t) {
      CHECK(c.pr[t].recall <= c.pr[t - 1].recall);
      CHECK(c.roc[t].tpr <= c.roc[t - 1].tpr);
      CHECK(c.roc[t].fpr <= c.roc[t - 1].fpr);
    }
    CHECK(c.auc >= 0.0);
    CHECK(c.auc <= 1.0);

    // Strictly monotone remap of integer levels (L -> 2L + 1) leaves the ranking, and so AUC, unchanged.
    std::vector<double> levels(map.data().begin(), map.data().end());
    for (double& v : levels) v = std::round(v * 127) / 255.0;
    const auto base = curves(gray(20, 20, levels), g).auc;
    std::vector<double> shifted = levels;
    for (double& v : shifted) v = (2 * std::round(v * 255) + 1) / 255.0;
    CHECK(curves(gray(20, 20, shifted), g).auc == doctest::Approx(base).epsilon(1e-15));
  }
}

TEST_CASE("mae") {
  const auto truth = gray(4, 1, {1, 0, 1, 0});
  const auto g = ground_truth_mask(truth);
  CHECK(mae(truth, g) == 0.0);
  CHECK(mae(gray(4, 1, {0.5, 0.5, 0.5, 0.5}), g) == 0.5);
  const auto map = testing::random_image(9, 7, 1, 5);
  const auto g2 = ground_truth_mask(testing::random_image(9, 7, 1, 6));
  double naive = 0;
  for (std::size_t i = 0; i < map.pixel_count(); ++i) naive += std::abs(map.data()[i] - g2.bits[i]);
  CHECK(mae(map, g2) == doctest::Approx(naive / 63).epsilon(1e-15));
}

TEST_CASE("three-image report matches the oracle") {
  const auto report = evaluate(fixture_pairs());
  REQUIRE(report.images.size() == 3);
  // Frozen from tests/oracles/metrics_oracle.py.
  const double ave[3] = {0.41935483870967744, 0.41935483870967744, 0.41935483870967744};
  const double maxf[3] = {0.8863636363636366, 0.915492957746479, 0.915492957746479};
  const double auc[3] = {0.8758503401360543, 0.91156462585034, 0.9183673469387754};
  const double err[3] = {0.34879551820728294, 0.33187675070028017, 0.3250420168067227};
  for (int k = 0; k < 3; ++k) {
    CHECK(report.images[k].name == "img" + std::to_string(k));
    CHECK(std::abs(report.images[k].ave_f - ave[k]) <= 1e-10);
    CHECK(std::abs(report.images[k].max_f - maxf[k]) <= 1e-10);
    CHECK(std::abs(report.images[k].auc - auc[k]) <= 1e-10);
    CHECK(std::abs(report.images[k].mae - err[k]) <= 1e-10);
  }
  CHECK(std::abs(report.ave_f - 0.41935483870967744) <= 1e-10);
  CHECK(std::abs(report.max_f - 0.8863636363636366) <= 1e-10);
  CHECK(std::abs(report.auc - 0.9019274376417233) <= 1e-10);
  CHECK(std::abs(report.mae - 0.3352380952380953) <= 1e-10);
  CHECK(adaptive_threshold(testing::metrics_fixture(0).prediction) == 182);
  CHECK(adaptive_threshold(testing::metrics_fixture(1).prediction) == 175);
  CHECK(adaptive_threshold(testing::metrics_fixture(2).prediction) == 191);
  const struct {
    int t;
    double p, r;
  } pts[] = {{0, 0.4000000000000001, 1.0},
             {64, 0.5694444444444445, 0.9761904761904763},
             {128, 1.0, 0.5476190476190476},
             {200, 1.0, 0.023809523809523808},
             {255, 1.0, 0.0}};
  for (const auto& pt : pts) {
    CHECK(std::abs(report.mean_pr[pt.t].precision - pt.p) <= 1e-10);
    CHECK(std::abs(report.mean_pr[pt.t].recall - pt.r) <= 1e-10);
  }
  CHECK(evaluate(fixture_pairs(), 0.3, false).max_f == report.max_f);
}

TEST_CASE("perfect predictions score exactly") {
  std::vector<NamedPair> pairs;
  for (int k = 0; k < 3; ++k) {
    auto f = testing::metrics_fixture(k);
    pairs.push_back({"p" + std::to_string(k), f.truth, f.truth});
  }
  const auto r = evaluate(pairs);
  CHECK(r.ave_f == 1.0);
  CHECK(r.max_f == 1.0);
  CHECK(r.auc == 1.0);
  CHECK(r.mae == 0.0);

  // Two identical images: dataset means equal the per-image values.
  auto f = testing::metrics_fixture(1);
  const auto twin = evaluate({{"a", f.prediction, f.truth}, {"b", f.prediction, f.truth}});
  CHECK(twin.ave_f == twin.images[0].ave_f);
  CHECK(twin.max_f == doctest::Approx(twin.images[0].max_f).epsilon(1e-15));
  CHECK(twin.auc == twin.images[0].auc);
  CHECK(twin.mae == twin.images[0].mae);
}

TEST_CASE("evaluate_dataset and write_report") {
  const auto root = testing::scratch_dir("metrics");
  std::filesystem::create_directories(root / "pred");
  std::filesystem::create_directories(root / "gt");
  for (int k = 0; k < 3; ++k) {
    const auto f = testing::metrics_fixture(k);
    write_pgm(f.prediction, root / "pred" / ("img" + std::to_string(k) + ".pgm"));
    write_pgm(f.truth, root / "gt" / ("img" + std::to_string(k) + ".pgm"));
  }
  write_pgm(testing::metrics_fixture(0).truth, root / "pred" / "orphan.pgm");
  const auto report = evaluate_dataset(root / "pred", root / "gt");
  REQUIRE(report.images.size() == 3);
  CHECK(report.skipped.size() == 1);
  // Fixture levels are exact multiples of 1/255, so the PGM round trip is lossless.
  CHECK(std::abs(report.auc - 0.9019274376417233) <= 1e-10);
  CHECK(std::abs(report.max_f - 0.8863636363636366) <= 1e-10);

  write_report(report, root / "out");
  std::ifstream csv(root / "out" / "report.csv");
  std::string header, mean_row, line;
  std::getline(csv, header);
  std::getline(csv, mean_row);
  CHECK(header == "name,aveF,maxF,AUC,MAE");
  CHECK(mean_row.rfind("mean,", 0) == 0);
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 3);
  for (const char* name : {"pr.csv", "roc.csv"}) {
    std::ifstream in(root / "out" / name);
    int n = 0;
    while (std::getline(in, line)) ++n;
    CHECK(n == 257);
  }
  CHECK(evaluate_dataset(root / "gt", root / "gt").ave_f == 1.0);
  std::filesystem::remove_all(root);
}
