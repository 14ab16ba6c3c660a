#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "salreg/image.hpp"

namespace salreg::metrics {

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;
  std::size_t count() const;
};

/// Pixel is set iff round(value * 255) > threshold.
BinaryMask binarize(const RasterImage& map, int threshold);

/// Ground truth: gray level (channel mean for color files) above 127.
BinaryMask ground_truth_mask(const RasterImage& gt);

struct PrecisionRecall {
  double precision = 0;
  double recall = 0;
};

/// Empty prediction has precision 1 by convention; empty truth is an error.
PrecisionRecall precision_recall(const BinaryMask& m, const BinaryMask& g);

struct RocPoint {
  double fpr = 0;
  double tpr = 0;
};

/// Requires a ground truth that is neither empty nor full.
RocPoint roc_point(const BinaryMask& m, const BinaryMask& g);

/// (1 + eta2) p r / (eta2 p + r), 0 when both are 0.
double f_measure(double precision, double recall, double eta2 = 0.3);

/// round(min(2 * mean, 1) * 255).
int adaptive_threshold(const RasterImage& map);

struct PrPoint {
  int threshold = 0;
  double precision = 0;
  double recall = 0;
};

struct RocCurvePoint {
  int threshold = 0;
  double fpr = 0;
  double tpr = 0;
};

struct Curves {
  std::array<PrPoint, 256> pr{};
  std::array<RocCurvePoint, 256> roc{};
  double auc = 0;
};

/// Sweeps thresholds 0..255 using a level histogram.
Curves curves(const RasterImage& map, const BinaryMask& g, bool parallel = true);

/// Trapezoidal area under the ROC points plus (0,0) and (1,1), sorted by fpr.
double auc_from_roc(const std::array<RocCurvePoint, 256>& roc);

double mae(const RasterImage& map, const BinaryMask& g);

struct ImageReport {
  std::string name;
  double ave_f = 0;
  double max_f = 0;  // over this image's own PR curve
  double auc = 0;
  double mae = 0;
};

struct EvalReport {
  std::vector<ImageReport> images;
  double ave_f = 0;  // mean of per-image aveF
  double max_f = 0;  // max F over the threshold-averaged PR curve
  double auc = 0;
  double mae = 0;
  std::array<PrPoint, 256> mean_pr{};
  std::array<RocCurvePoint, 256> mean_roc{};
  std::vector<std::string> skipped;  // reasons, one per unusable file
};

struct NamedPair {
  std::string name;
  RasterImage prediction;
  RasterImage ground_truth;
};

EvalReport evaluate(const std::vector<NamedPair>& pairs, double eta2 = 0.3, bool parallel = true);

/// Pairs files by stem (.pgm/.ppm/.pnm) between the two directories.
EvalReport evaluate_dataset(const std::filesystem::path& pred_dir,
                            const std::filesystem::path& gt_dir, double eta2 = 0.3);

/// report.csv (summary row "mean" then one row per image), pr.csv, roc.csv.
void write_report(const EvalReport& report, const std::filesystem::path& out_dir);

}  // namespace salreg::metrics
