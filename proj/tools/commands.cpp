#include "commands.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <thread>

#include "manifest.hpp"
#include "salreg/error.hpp"
#include "salreg/metrics.hpp"
#include "salreg/pipeline.hpp"
#include "salreg/tinynet.hpp"

namespace salreg::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

RasterImage read_rgb(const fs::path& path) {
  RasterImage img = read_pnm(path);
  if (img.channels() == 3) return img;
  RasterImage rgb(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = img.at(x, y);
  return rgb;
}

RasterImage read_gray(const fs::path& path) {
  RasterImage img = read_pnm(path);
  if (img.channels() == 1) return img;
  RasterImage gray(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      gray.at(x, y) = (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0;
  return gray;
}

bool is_pnm(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_pnm(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

/// Gaussian center prior used when no network map is supplied.
RasterImage center_prior(int w, int h) {
  RasterImage m(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = (x + 0.5) / w - 0.5, dy = (y + 0.5) / h - 0.5;
      m.at(x, y) = std::exp(-(dx * dx + dy * dy) / (2 * 0.25 * 0.25));
    }
  return m;
}

RasterImage match_deepmap(const RasterImage& deep, const RasterImage& image, bool resize,
                          const fs::path& name) {
  if (deep.width() == image.width() && deep.height() == image.height()) return deep;
  if (!resize)
    throw ShapeError("deep map " + name.string() + " is " + std::to_string(deep.width()) + "x" +
                     std::to_string(deep.height()) + ", image is " + std::to_string(image.width()) +
                     "x" + std::to_string(image.height()) + " (use --resize)");
  RasterImage r = resize_bilinear(deep, image.width(), image.height());
  for (double& v : r.data()) v = std::clamp(v, 0.0, 1.0);
  return r;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

}  // namespace

int thread_budget(int requested) {
  int n = std::max(1, requested);
  if (const char* env = std::getenv("SAL_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

int cmd_segment(const SegmentArgs& args, const Config& config) {
  const RasterImage image = read_rgb(args.image);
  SlicOptions opt;
  opt.n_target = std::min<long>(config.n_superpixels, static_cast<long>(image.pixel_count()));
  opt.compactness = config.slic_compactness;
  opt.seed = config.seed;
  const auto seg = oversegment(srgb_to_lab(image), opt);

  fs::create_directories(args.out_dir);
  write_label_pgm(seg.labels, seg.width, seg.height, args.out_dir / "labels.pgm");
  std::ofstream csv(args.out_dir / "features.csv");
  if (!csv) throw IoError("cannot write " + (args.out_dir / "features.csv").string());
  csv << std::setprecision(17) << "index,L,a,b,size,is_boundary\n";
  for (int r = 0; r < seg.n; ++r)
    csv << r << ',' << seg.features[r][0] << ',' << seg.features[r][1] << ',' << seg.features[r][2]
        << ',' << seg.sizes[r] << ',' << static_cast<int>(seg.boundary[r]) << '\n';
  std::cout << seg.n << " superpixels\n";
  return 0;
}

int cmd_run(const RunArgs& args, const Config& config) {
  const RasterImage image = read_rgb(args.image);
  const RasterImage deep = match_deepmap(read_gray(args.deepmap), image, args.resize, args.deepmap);

  const auto start = Clock::now();
  const PipelineResult r = run_pipeline_detailed(image, deep, config.pipeline());
  const double total = ms_since(start);

  ensure_parent(args.out);
  write_pgm(r.final_map, args.out);
  if (args.dump_stages) {
    fs::create_directories(*args.dump_stages);
    write_pgm(render(r.deep, r.segmentation), *args.dump_stages / "deep.pgm");
    write_pgm(render(r.boundary, r.segmentation), *args.dump_stages / "boundary.pgm");
    write_pgm(render(r.coarse, r.segmentation), *args.dump_stages / "cg.pgm");
    write_pgm(render(r.refined, r.segmentation), *args.dump_stages / "refined.pgm");
    write_label_pgm(r.segmentation.labels, r.segmentation.width, r.segmentation.height,
                    *args.dump_stages / "labels.pgm");
  }
  if (args.dump_graph) {
    fs::create_directories(*args.dump_graph);
    dump_graph_csv(r.graph, *args.dump_graph);
  }
  if (args.manifest) {
    ManifestWriter m(*args.manifest, config);
    m.append({"run", args.image.filename().string(), r.timings, total});
  }
  return 0;
}

int cmd_eval(const EvalArgs& args, const Config& config) {
  for (const auto& d : {args.pred_dir, args.gt_dir})
    if (!fs::is_directory(d)) throw IoError("not a directory: " + d.string());
  const auto report = metrics::evaluate_dataset(args.pred_dir, args.gt_dir, config.eta2);
  for (const auto& s : report.skipped) std::cerr << "skipped: " << s << '\n';
  if (report.images.empty()) throw EmptyDatasetError("no prediction/ground-truth pairs matched");
  metrics::write_report(report, args.out_dir);
  std::cout << std::setprecision(6) << "images " << report.images.size() << "  aveF "
            << report.ave_f << "  maxF " << report.max_f << "  AUC " << report.auc << "  MAE "
            << report.mae << '\n';
  return 0;
}

int cmd_train_toy(const TrainArgs& args, const Config& config) {
  using namespace tinynet;
  const auto count = static_cast<std::size_t>(config.toy_count);
  const Dataset seg = make_disc_dataset(Head::segmentation, count, config.toy_size, config.seed);
  const Dataset sal = make_disc_dataset(Head::saliency, count, config.toy_size, config.seed);
  const TrainConfig tc = config.training();
  const TinyNetParams init = init_params(tc.arch, tc.seed);
  const double j1_0 = dataset_loss(init, seg), j2_0 = dataset_loss(init, sal);

  std::vector<LossRecord> log;
  const fs::path loss_path = args.loss_csv.value_or(args.out.parent_path() / "loss.csv");
  auto write_log = [&] {
    ensure_parent(loss_path);
    std::ofstream csv(loss_path);
    if (!csv) throw IoError("cannot write " + loss_path.string());
    csv << std::setprecision(17) << "round,phase,step,loss\n";
    for (const auto& r : log) csv << r.round << ',' << head_name(r.phase) << ',' << r.step << ',' << r.loss << '\n';
  };

  TinyNetParams trained;
  try {
    trained = alternate_train_from(init, seg, sal, tc, &log);
  } catch (const DivergenceError&) {
    write_log();
    std::cerr << "last finite losses:";
    for (std::size_t i = log.size() > 5 ? log.size() - 5 : 0; i < log.size(); ++i)
      std::cerr << ' ' << log[i].loss;
    std::cerr << '\n';
    throw;
  }
  ensure_parent(args.out);
  save_checkpoint(trained, args.out);
  write_log();
  const double j1 = dataset_loss(trained, seg), j2 = dataset_loss(trained, sal);
  std::cout << std::setprecision(6) << "J1 " << j1_0 << " -> " << j1 << "  J2 " << j2_0 << " -> "
            << j2 << '\n';
  return 0;
}

int cmd_infer(const InferArgs& args, const Config&) {
  using namespace tinynet;
  const TinyNetParams params = load_checkpoint(args.checkpoint);
  const RasterImage image = read_rgb(args.image);
  const int w = image.width(), h = image.height();
  // The network needs even sides; replicate the last row/column if odd.
  const int ew = w + (w % 2), eh = h + (h % 2);
  Tensor x = Tensor::nchw(1, 3, static_cast<std::size_t>(eh), static_cast<std::size_t>(ew));
  for (int y = 0; y < eh; ++y)
    for (int xx = 0; xx < ew; ++xx)
      for (int c = 0; c < 3; ++c) x.at(0, c, y, xx) = image.at(std::min(xx, w - 1), std::min(y, h - 1), c);
  const Tensor out = forward(params, x, Head::saliency);
  RasterImage map(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) map.at(xx, y) = out.at(0, 0, y, xx);
  ensure_parent(args.out);
  write_pgm(map, args.out);
  return 0;
}

int cmd_bench(const BenchArgs& args, const Config& config) {
  const auto images = list_images(args.image_dir);
  if (images.empty()) throw EmptyDatasetError("no PNM images in " + args.image_dir.string());
  fs::create_directories(args.out_dir);
  ManifestWriter manifest(args.manifest.value_or(args.out_dir / "manifest.jsonl"), config);
  const PipelineConfig pc = config.pipeline();

  const int workers = std::min<int>(thread_budget(args.jobs), static_cast<int>(images.size()));
  std::vector<RunRecord> records(images.size());
  std::vector<std::string> errors(images.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    if (workers > 1) omp_set_num_threads(1);
    for (std::size_t i; (i = next.fetch_add(1)) < images.size();) {
      try {
        const RasterImage image = read_rgb(images[i]);
        RasterImage deep = center_prior(image.width(), image.height());
        if (args.deepmap_dir) {
          const fs::path stem = images[i].stem();
          fs::path found;
          for (const char* ext : {".pgm", ".pnm", ".ppm"})
            if (fs::exists(*args.deepmap_dir / (stem.string() + ext))) {
              found = *args.deepmap_dir / (stem.string() + ext);
              break;
            }
          if (found.empty()) throw IoError("no deep map for " + images[i].filename().string());
          deep = match_deepmap(read_gray(found), image, true, found);
        }
        const auto start = Clock::now();
        const PipelineResult r = run_pipeline_detailed(image, deep, pc);
        records[i] = {"bench", images[i].filename().string(), r.timings, ms_since(start)};
        write_pgm(r.final_map, args.out_dir / (images[i].stem().string() + ".pgm"));
        manifest.append(records[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  int failed = 0;
  for (std::size_t i = 0; i < images.size(); ++i)
    if (!errors[i].empty()) {
      std::cerr << images[i].filename().string() << ": " << errors[i] << '\n';
      ++failed;
    }

  std::map<std::string, std::vector<double>> per_stage;
  std::vector<std::string> order;
  std::vector<double> totals;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!errors[i].empty()) continue;
    for (const auto& s : records[i].stages) {
      if (!per_stage.count(s.stage)) order.push_back(s.stage);
      per_stage[s.stage].push_back(s.ms);
    }
    totals.push_back(records[i].total_ms);
  }
  std::ofstream csv(args.out_dir / "timing.csv");
  csv << std::setprecision(6) << std::fixed << "stage,median_ms,p95_ms\n";
  std::cout << std::setprecision(3) << std::fixed;
  std::cout << "stage        median_ms      p95_ms\n";
  auto emit = [&](const std::string& name, const std::vector<double>& v) {
    csv << name << ',' << percentile(v, 0.5) << ',' << percentile(v, 0.95) << '\n';
    std::cout << std::left << std::setw(10) << name << std::right << std::setw(12)
              << percentile(v, 0.5) << std::setw(12) << percentile(v, 0.95) << '\n';
  };
  for (const auto& s : order) emit(s, per_stage[s]);
  emit("total", totals);
  std::cout << totals.size() << " images, " << failed << " failed, " << workers << " workers\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace salreg::cli
