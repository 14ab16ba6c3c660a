// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <Eigen/Eigenvalues>
#include <array>
#include <random>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "cli_support.hpp"
#include "gradcheck.hpp"
#include "salreg/config.hpp"
#include "salreg/metrics.hpp"
#include "salreg/pipeline.hpp"
#include "salreg/regression.hpp"
#include "salreg/tinynet.hpp"
#include "support.hpp"

using namespace salreg;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// --- Criteria --------------------------------------------------------------

struct Quadratic {
  Eigen::MatrixXd h;  // Hessian of the objective in alpha
  Eigen::VectorXd b;  // gradient = h * alpha - b
};

Quadratic objective_quadratic(const RegressionProblem& p) {
  const SuperpixelGraph& g = p.graph();
  const double nn = static_cast<double>(p.n()) * p.n();
  const Eigen::MatrixXd jk = p.label_mask().asDiagonal() * g.k;
  return {(2.0 / p.l()) * g.k * jk + 2 * p.params().gamma_a * g.k +
              (2 * p.params().gamma_i / nn) * g.k * g.l * g.k,
          (2.0 / p.l()) * g.k * p.y()};
}

// Fixed-step gradient descent from zero. The problem is unconstrained, so
// the projection is the identity.
Eigen::VectorXd gradient_descent(const Quadratic& q) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(q.b.size());
  for (int it = 0; it < 100000; ++it) a -= 1e-2 * (q.h * a - q.b);
  return a;
}

// Restarted conjugate gradients in long double.
Eigen::VectorXd conjugate_gradient(const Quadratic& q) {
  using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const Mat h = q.h.cast<long double>();
  const Vec b = q.b.cast<long double>();
  const auto n = b.size();
  Vec a = Vec::Zero(n), r = b, d = r;
  long double rr = r.squaredNorm();
  for (Eigen::Index it = 0; it < 50 * n && rr > 1e-40L; ++it) {
    if (it > 0 && it % n == 0) {
      r = b - h * a;
      d = r;
      rr = r.squaredNorm();
    }
    const Vec hd = h * d;
    const long double step = rr / d.dot(hd);
    a += step * d;
    r -= step * hd;
    const long double next = r.squaredNorm();
    d = r + (next / rr) * d;
    rr = next;
  }
  return a.cast<double>();
}

Outcome solver_oracle() {
  const auto start = Clock::now();
  double gd_gap = 0, cg_gap = 0, worst_resid = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int n = 3 + static_cast<int>(seed % 18);
    const auto seeds = testing::random_seeds(n, 2000 + seed);
    auto relative = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };

    // Step 1e-2 for 1e5 iterations only converges when the Hessian's smallest
    // eigenvalue is well above 1e-5, so these instances use a narrower kernel
    // and a larger ambient weight.
    std::mt19937_64 rng(3000 + seed);
    const double gamma_a = std::pow(10.0, -1.0 + std::uniform_real_distribution<double>(0, 1)(rng));
    const double gamma_i = std::array<double, 3>{0.1, 1.0, 10.0}[rng() % 3];
    const auto g1 = testing::random_graph(n, 1000 + seed, 0.05);
    const RegressionProblem p1(g1, seeds.labeled, seeds.y, {gamma_a, gamma_i});
    const auto s1 = solve(p1);
    gd_gap = std::max(gd_gap, relative(objective(p1, gradient_descent(objective_quadratic(p1))),
                                       objective(p1, s1.alpha)));

    // Default parameters, checked against conjugate gradients.
    const auto g2 = testing::random_graph(n, 1000 + seed);
    const RegressionProblem p2(g2, seeds.labeled, seeds.y);
    const auto s2 = solve(p2);
    cg_gap = std::max(cg_gap, relative(objective(p2, conjugate_gradient(objective_quadratic(p2))),
                                       objective(p2, s2.alpha)));

    for (const auto* pr : {&p1, &p2}) {
      const auto& s = pr == &p1 ? s1 : s2;
      worst_resid = std::max(worst_resid, objective_gradient(*pr, s.alpha).norm() / (1 + seeds.y.norm()));
    }
  }
  const double t = seconds_since(start);
  const bool ok = gd_gap <= 1e-6 && cg_gap <= 1e-6 && worst_resid <= 1e-8 && t < 10.0;
  return {ok, "50 instances, gradient-descent gap " + fmt(gd_gap) + ", default-parameter CG gap " +
                  fmt(cg_gap) + ", worst residual/(1+|y|) " + fmt(worst_resid) + ", " + fmt(t, 3) + " s"};
}

Outcome hand_instance() {
  const std::vector<LabColor> f{{0, 0, 0}, {0.2, 0, 0}, {0.4, 0, 0}};
  const std::vector<RegionPair> path{{0, 1}, {1, 2}};
  const auto g = build_graph(f, path, 0.1);
  Eigen::VectorXd y(3);
  y << -1, 0, 0;
  const auto s = solve(RegressionProblem(g, {0}, y, {1e-6, 1.0}));
  // 50-digit mpmath inversion (tests/oracles/regression_oracle.py).
  const double oracle[3] = {-1.0871898221746498888, 0.45752107403501060889, -1.0871609405908390159};
  double err = 0;
  for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(s.alpha[i] - oracle[i]));
  return {err <= 1e-10, "max |alpha - oracle| = " + fmt(err)};
}

Outcome gradient_checks() {
  using namespace tinynet;
  const auto start = Clock::now();
  Architecture arch;
  arch.classes = 3;
  double worst = 0;
  std::string where;
  std::size_t checked = 0;
  for (Head head : {Head::segmentation, Head::saliency})
    for (std::uint64_t seed = 0; seed < 2; ++seed) {
      const auto r = testing::gradient_check(init_params(arch, 50 + seed),
                                             testing::random_batch(head, 3, 60 + seed));
      checked += r.checked;
      if (r.worst >= worst) {
        worst = r.worst;
        where = r.where;
      }
    }
  const double t = seconds_since(start);
  return {worst <= 1e-4 && t < 60.0, std::to_string(checked) + " parameters, worst rel err " +
                                         fmt(worst) + " at " + where + ", " + fmt(t, 3) + " s"};
}

Outcome alternating_schedule() {
  using namespace tinynet;
  const auto start = Clock::now();
  const Config defaults;
  const auto seg = make_disc_dataset(Head::segmentation, 64, 16, 42);
  const auto sal = make_disc_dataset(Head::saliency, 64, 16, 42);
  const TrainConfig tc = defaults.training();
  TinyNetParams prev = init_params(tc.arch, tc.seed);
  const double j1_0 = dataset_loss(prev, seg), j2_0 = dataset_loss(prev, sal);
  bool isolation = true;
  auto observer = [&](int, Head phase, const TinyNetParams& now) {
    const bool trunk_moved = !(now.trunk == prev.trunk);
    const bool own_moved = !(now.head(phase) == prev.head(phase));
    const Head other = phase == Head::segmentation ? Head::saliency : Head::segmentation;
    const bool other_fixed = now.head(other) == prev.head(other);
    isolation = isolation && trunk_moved && own_moved && other_fixed;
    prev = now;
  };
  const auto trained = alternate_train(seg, sal, tc, nullptr, observer);
  const double j1 = dataset_loss(trained, seg), j2 = dataset_loss(trained, sal);
  const double t = seconds_since(start);
  const bool drop = j1 <= 0.5 * j1_0 && j2 <= 0.5 * j2_0;
  return {isolation && drop && t < 300.0,
          std::string("phase isolation ") + (isolation ? "ok" : "violated") + ", J1 " + fmt(j1_0) +
              " -> " + fmt(j1) + ", J2 " + fmt(j2_0) + " -> " + fmt(j2) + ", " + fmt(t, 3) + " s"};
}

struct FixtureSet {
  std::vector<testing::DiscFixture> fixtures;
  std::vector<RasterImage> deep;
  std::vector<RasterImage> degraded;  // weak disc plus a false band on one border
};

const FixtureSet& disc_set() {
  static const FixtureSet set = [] {
    FixtureSet s;
    for (std::uint64_t k = 0; k < 20; ++k) {
      s.fixtures.push_back(testing::disc_fixture(100, 7000 + k));
      s.deep.push_back(testing::box_blur(s.fixtures.back().truth, 9));
      RasterImage d = testing::box_blur(s.fixtures.back().truth, 15);
      const int side = static_cast<int>(k % 4);
      for (int y = 0; y < d.height(); ++y)
        for (int x = 0; x < d.width(); ++x) {
          const int edge = side == 0 ? y : side == 1 ? x : side == 2 ? d.height() - 1 - y : d.width() - 1 - x;
          d.at(x, y) = 0.5 * d.at(x, y) + (edge < 12 ? 0.8 : 0.0);
        }
      s.degraded.push_back(std::move(d));
    }
    return s;
  }();
  return set;
}

double dataset_max_f(const std::function<RasterImage(std::size_t)>& map_for) {
  const auto& s = disc_set();
  std::vector<metrics::NamedPair> pairs;
  for (std::size_t i = 0; i < s.fixtures.size(); ++i)
    pairs.push_back({std::to_string(i), map_for(i), s.fixtures[i].truth});
  return metrics::evaluate(pairs).max_f;
}

Outcome refinement_direction() {
  const auto& s = disc_set();
  const PipelineConfig cfg;
  const double with = dataset_max_f([&](std::size_t i) { return run_pipeline(s.fixtures[i].image, s.deep[i], cfg); });
  const double without = dataset_max_f([&](std::size_t i) { return s.deep[i]; });
  return {with >= without, "maxF with refinement " + fmt(with, 8) + " vs deep map " + fmt(without, 8)};
}

Outcome beta_direction() {
  const auto& s = disc_set();
  PipelineConfig with_prior, without_prior;
  without_prior.beta = 0.0;
  const double a = dataset_max_f([&](std::size_t i) { return run_pipeline(s.fixtures[i].image, s.degraded[i], with_prior); });
  const double b = dataset_max_f([&](std::size_t i) { return run_pipeline(s.fixtures[i].image, s.degraded[i], without_prior); });
  const double raw = dataset_max_f([&](std::size_t i) { return s.degraded[i]; });
  return {a >= b, "degraded deep maps (raw maxF " + fmt(raw, 8) + "): maxF beta=0.2 " + fmt(a, 8) +
                      " vs beta=0 " + fmt(b, 8)};
}

Outcome metric_exactness() {
  std::vector<metrics::NamedPair> perfect, synthetic;
  for (int k = 0; k < 3; ++k) {
    const auto f = testing::metrics_fixture(k);
    perfect.push_back({"p" + std::to_string(k), f.truth, f.truth});
    synthetic.push_back({"img" + std::to_string(k), f.prediction, f.truth});
  }
  const auto p = metrics::evaluate(perfect);
  const bool exact = p.ave_f == 1.0 && p.max_f == 1.0 && p.auc == 1.0 && p.mae == 0.0;

  // Frozen from tests/oracles/metrics_oracle.py: rows img0..img2 then mean,
  // columns aveF, maxF, AUC, MAE.
  const double oracle[4][4] = {
      {0.41935483870967744, 0.8863636363636366, 0.8758503401360543, 0.34879551820728294},
      {0.41935483870967744, 0.915492957746479, 0.91156462585034, 0.33187675070028017},
      {0.41935483870967744, 0.915492957746479, 0.9183673469387754, 0.3250420168067227},
      {0.41935483870967744, 0.8863636363636366, 0.9019274376417233, 0.3352380952380953}};
  const auto r = metrics::evaluate(synthetic);
  double err = 0;
  for (int k = 0; k < 3; ++k) {
    const auto& im = r.images[k];
    const double got[4] = {im.ave_f, im.max_f, im.auc, im.mae};
    for (int c = 0; c < 4; ++c) err = std::max(err, std::abs(got[c] - oracle[k][c]));
  }
  const double mean[4] = {r.ave_f, r.max_f, r.auc, r.mae};
  for (int c = 0; c < 4; ++c) err = std::max(err, std::abs(mean[c] - oracle[3][c]));
  return {exact && err <= 1e-10, std::string("perfect set ") + (exact ? "exact" : "inexact") +
                                     ", 16 report cells max error " + fmt(err)};
}

Outcome graph_invariants() {
  double worst_sym = 0, worst_row = 0, min_eig = 1e300;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const int w = 30 + static_cast<int>(seed % 5) * 10, h = 25 + static_cast<int>(seed % 7) * 5;
    const auto seg = testing::random_segmentation(w, h, 5 + static_cast<int>(seed % 40), 9000 + seed);
    const auto g = build_graph(seg.features, build_adjacency(seg.labels, w, h), 0.1);
    worst_sym = std::max(worst_sym, (g.w - g.w.transpose()).cwiseAbs().maxCoeff());
    worst_row = std::max(worst_row, g.l.rowwise().sum().cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.k, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
  }
  const bool ok = worst_sym == 0.0 && worst_row <= 1e-10 && min_eig >= -1e-8;
  return {ok, "100 segmentations, max |W - W'| " + fmt(worst_sym) + ", max |L row sum| " +
                  fmt(worst_row) + ", min eig(K) " + fmt(min_eig)};
}

Outcome determinism(const fs::path& dir) {
  using testing::file_bytes;
  using testing::q;
  const auto fx = testing::disc_fixture(120, 77);
  write_pnm(fx.image, dir / "img.ppm");
  write_pgm(testing::box_blur(fx.truth, 9), dir / "deep.pgm");
  const std::string run = "run " + q(dir / "img.ppm") + " " + q(dir / "deep.pgm") + " --seed 7 --out ";
  bool ok = true;
  for (const char* tag : {"a", "b"})
    ok = ok && testing::run_cli(run + q(dir / (std::string("run_") + tag + ".pgm")), dir).status == 0;
  ok = ok && testing::run_cli(run + q(dir / "run_j4.pgm") + " --jobs 4", dir).status == 0;
  const bool run_same = ok && file_bytes(dir / "run_a.pgm") == file_bytes(dir / "run_b.pgm") &&
                        file_bytes(dir / "run_a.pgm") == file_bytes(dir / "run_j4.pgm");

  const std::string train = "train-toy --seed 9 --steps 40 --out ";
  bool tok = true;
  for (const char* tag : {"a", "b", "j4"}) {
    const fs::path sub = dir / (std::string("train_") + tag);
    tok = tok && testing::run_cli(train + q(sub / "net.tnet") + (std::string(tag) == "j4" ? " --jobs 4" : ""), dir).status == 0;
  }
  auto same = [&](const char* file) {
    const auto a = file_bytes(dir / "train_a" / file);
    return !a.empty() && a == file_bytes(dir / "train_b" / file) && a == file_bytes(dir / "train_j4" / file);
  };
  const bool train_same = tok && same("net.tnet") && same("loss.csv");
  return {run_same && train_same, std::string("run outputs ") + (run_same ? "identical" : "differ") +
                                      ", train-toy checkpoint and loss log " +
                                      (train_same ? "identical" : "differ") + " (two runs and --jobs 4)"};
}

Outcome end_to_end(const fs::path& dir) {
  using testing::q;
  const auto fx = testing::disc_fixture(500, 99);
  write_pnm(fx.image, dir / "big.ppm");
  write_pgm(testing::box_blur(fx.truth, 9), dir / "big_deep.pgm");
  const auto start = Clock::now();
  const auto seg = testing::run_cli("segment " + q(dir / "big.ppm") + " --n 200 --out " + q(dir / "big_seg"), dir);
  const auto run = testing::run_cli("run " + q(dir / "big.ppm") + " " + q(dir / "big_deep.pgm") +
                                        " --n 200 --out " + q(dir / "big_out.pgm"),
                                    dir);
  const double t = seconds_since(start);
  const bool ok = seg.status == 0 && run.status == 0 && t < 5.0;
  return {ok, "segment + run on 500x500 with N=200: " + fmt(t, 3) + " s (exit " +
                  std::to_string(seg.status) + "/" + std::to_string(run.status) + ")"};
}

}  // namespace

int main() {
  const fs::path dir = testing::scratch_dir("acceptance");
  criterion("solver-oracle equivalence", solver_oracle);
  criterion("closed-form hand instance", hand_instance);
  criterion("gradient correctness", gradient_checks);
  criterion("alternating schedule", alternating_schedule);
  criterion("refinement direction", refinement_direction);
  criterion("beta behaviour", beta_direction);
  criterion("metric suite exactness", metric_exactness);
  criterion("graph invariants", graph_invariants);
  criterion("determinism", [&] { return determinism(dir); });
  criterion("end-to-end smoke", [&] { return end_to_end(dir); });
  fs::remove_all(dir);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
