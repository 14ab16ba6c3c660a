#include "salreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <stdexcept>

#include "salreg/error.hpp"
#include "salreg/kernels.hpp"

namespace salreg::metrics {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

namespace {

void require_gray(const RasterImage& map) {
  if (map.channels() != 1) throw ShapeError("saliency map must be single-channel");
}

void require_same(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height) throw ShapeError("mask dimensions differ");
}

RasterImage to_gray(const RasterImage& img) {
  if (img.channels() == 1) return img;
  std::vector<double> v(img.pixel_count());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = (img.data()[3 * i] + img.data()[3 * i + 1] + img.data()[3 * i + 2]) / 3.0;
  return RasterImage(img.width(), img.height(), 1, std::move(v));
}

}  // namespace

BinaryMask binarize(const RasterImage& map, int threshold) {
  require_gray(map);
  BinaryMask m{map.width(), map.height(), std::vector<std::uint8_t>(map.pixel_count())};
  for (std::size_t i = 0; i < m.bits.size(); ++i)
    m.bits[i] = kernels::quantize_level(map.data()[i]) > threshold ? 1 : 0;
  return m;
}

BinaryMask ground_truth_mask(const RasterImage& gt) { return binarize(to_gray(gt), 127); }

PrecisionRecall precision_recall(const BinaryMask& m, const BinaryMask& g) {
  require_same(m, g);
  std::size_t tp = 0, predicted = 0, truth = 0;
  for (std::size_t i = 0; i < m.bits.size(); ++i) {
    tp += m.bits[i] & g.bits[i];
    predicted += m.bits[i];
    truth += g.bits[i];
  }
  if (truth == 0) throw std::invalid_argument("recall undefined for an empty ground truth");
  return {predicted == 0 ? 1.0 : static_cast<double>(tp) / predicted,
          static_cast<double>(tp) / truth};
}

RocPoint roc_point(const BinaryMask& m, const BinaryMask& g) {
  require_same(m, g);
  std::size_t tp = 0, fp = 0, truth = 0;
  for (std::size_t i = 0; i < m.bits.size(); ++i) {
    tp += m.bits[i] & g.bits[i];
    fp += m.bits[i] & (1 - g.bits[i]);
    truth += g.bits[i];
  }
  const std::size_t negatives = g.bits.size() - truth;
  if (truth == 0 || negatives == 0)
    throw std::invalid_argument("ROC undefined for an empty or full ground truth");
  return {static_cast<double>(fp) / negatives, static_cast<double>(tp) / truth};
}

double f_measure(double precision, double recall, double eta2) {
  if (precision == 0 && recall == 0) return 0.0;
  return (1 + eta2) * precision * recall / (eta2 * precision + recall);
}

int adaptive_threshold(const RasterImage& map) {
  require_gray(map);
  const auto v = map.data();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return kernels::quantize_level(std::min(2.0 * mean, 1.0));
}

double auc_from_roc(const std::array<RocCurvePoint, 256>& roc) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(258);
  pts.emplace_back(0.0, 0.0);
  pts.emplace_back(1.0, 1.0);
  for (const auto& p : roc) pts.emplace_back(p.fpr, p.tpr);
  std::sort(pts.begin(), pts.end());
  double area = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) / 2.0;
  return area;
}

Curves curves(const RasterImage& map, const BinaryMask& g, bool parallel) {
  require_gray(map);
  if (map.width() != g.width || map.height() != g.height) throw ShapeError("map and mask differ");
  const auto h = parallel ? kernels::omp::level_histogram(map.data(), g.bits)
                          : kernels::serial::level_histogram(map.data(), g.bits);
  const std::uint64_t truth = std::accumulate(h.foreground.begin(), h.foreground.end(), std::uint64_t{0});
  const std::uint64_t negatives = std::accumulate(h.background.begin(), h.background.end(), std::uint64_t{0});
  if (truth == 0 || negatives == 0)
    throw std::invalid_argument("curves undefined for an empty or full ground truth");

  Curves c;
  std::uint64_t tp = 0, fp = 0;  // counts of levels strictly above the threshold
  for (int t = 255; t >= 0; --t) {
    if (t < 255) {
      tp += h.foreground[t + 1];
      fp += h.background[t + 1];
    }
    const double precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
    c.pr[t] = {t, precision, static_cast<double>(tp) / truth};
    c.roc[t] = {t, static_cast<double>(fp) / negatives, static_cast<double>(tp) / truth};
  }
  c.auc = auc_from_roc(c.roc);
  return c;
}

double mae(const RasterImage& map, const BinaryMask& g) {
  require_gray(map);
  if (map.width() != g.width || map.height() != g.height) throw ShapeError("map and mask differ");
  double total = 0;
  for (std::size_t i = 0; i < g.bits.size(); ++i) total += std::abs(map.data()[i] - g.bits[i]);
  return total / static_cast<double>(g.bits.size());
}

EvalReport evaluate(const std::vector<NamedPair>& pairs, double eta2, bool parallel) {
  EvalReport report;
  std::array<double, 256> sum_p{}, sum_r{}, sum_fpr{}, sum_tpr{};
  for (const auto& pair : pairs) {
    const RasterImage pred = to_gray(pair.prediction);
    const BinaryMask g = ground_truth_mask(pair.ground_truth);
    if (pred.width() != g.width || pred.height() != g.height) {
      report.skipped.push_back(pair.name + ": prediction and ground truth sizes differ");
      continue;
    }
    const std::size_t truth = g.count();
    if (truth == 0 || truth == g.bits.size()) {
      report.skipped.push_back(pair.name + ": ground truth is empty or full");
      continue;
    }
    const Curves c = curves(pred, g, parallel);
    ImageReport row;
    row.name = pair.name;
    const PrecisionRecall adaptive = precision_recall(binarize(pred, adaptive_threshold(pred)), g);
    row.ave_f = f_measure(adaptive.precision, adaptive.recall, eta2);
    for (const auto& p : c.pr) row.max_f = std::max(row.max_f, f_measure(p.precision, p.recall, eta2));
    row.auc = c.auc;
    row.mae = mae(pred, g);
    for (int t = 0; t < 256; ++t) {
      sum_p[t] += c.pr[t].precision;
      sum_r[t] += c.pr[t].recall;
      sum_fpr[t] += c.roc[t].fpr;
      sum_tpr[t] += c.roc[t].tpr;
    }
    report.images.push_back(std::move(row));
  }
  const double count = static_cast<double>(report.images.size());
  if (report.images.empty()) return report;
  for (const auto& row : report.images) {
    report.ave_f += row.ave_f;
    report.auc += row.auc;
    report.mae += row.mae;
  }
  report.ave_f /= count;
  report.auc /= count;
  report.mae /= count;
  for (int t = 0; t < 256; ++t) {
    report.mean_pr[t] = {t, sum_p[t] / count, sum_r[t] / count};
    report.mean_roc[t] = {t, sum_fpr[t] / count, sum_tpr[t] / count};
    report.max_f = std::max(report.max_f,
                            f_measure(report.mean_pr[t].precision, report.mean_pr[t].recall, eta2));
  }
  return report;
}

namespace {

bool is_pnm(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::map<std::string, std::filesystem::path> index_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::map<std::string, std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && is_pnm(entry.path()))
      out.emplace(entry.path().stem().string(), entry.path());
  return out;
}

}  // namespace

EvalReport evaluate_dataset(const std::filesystem::path& pred_dir,
                            const std::filesystem::path& gt_dir, double eta2) {
  const auto preds = index_dir(pred_dir);
  const auto gts = index_dir(gt_dir);
  std::vector<NamedPair> pairs;
  std::vector<std::string> unmatched;
  for (const auto& [stem, path] : preds) {
    const auto it = gts.find(stem);
    if (it == gts.end()) {
      unmatched.push_back(stem + ": no ground truth in " + gt_dir.string());
      continue;
    }
    try {
      pairs.push_back({stem, read_pnm(path), read_pnm(it->second)});
    } catch (const std::exception& e) {
      unmatched.push_back(stem + ": " + e.what());
    }
  }
  for (const auto& [stem, path] : gts)
    if (!preds.count(stem)) unmatched.push_back(stem + ": no prediction in " + pred_dir.string());

  EvalReport report = evaluate(pairs, eta2);
  report.skipped.insert(report.skipped.begin(), unmatched.begin(), unmatched.end());
  return report;
}

void write_report(const EvalReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto open = [&](const char* name) {
    std::ofstream out(out_dir / name);
    if (!out) throw IoError("cannot write " + (out_dir / name).string());
    out << std::setprecision(17);
    return out;
  };
  {
    auto out = open("report.csv");
    out << "name,aveF,maxF,AUC,MAE\n";
    out << "mean," << report.ave_f << ',' << report.max_f << ',' << report.auc << ',' << report.mae << '\n';
    for (const auto& r : report.images)
      out << r.name << ',' << r.ave_f << ',' << r.max_f << ',' << r.auc << ',' << r.mae << '\n';
  }
  {
    auto out = open("pr.csv");
    out << "threshold,precision,recall\n";
    for (const auto& p : report.mean_pr) out << p.threshold << ',' << p.precision << ',' << p.recall << '\n';
  }
  {
    auto out = open("roc.csv");
    out << "threshold,fpr,tpr\n";
    for (const auto& p : report.mean_roc) out << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
  }
}

}  // namespace salreg::metrics
