#include "salreg/tinynet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "salreg/error.hpp"
#include "salreg/kernels.hpp"

namespace salreg::tinynet {

const char* head_name(Head head) noexcept {
  return head == Head::segmentation ? "seg" : "sal";
}

// --- Parameters ----------------------------------------------------------

Tensor bilinear_kernel(std::size_t channels) {
  constexpr double taps[4] = {0.25, 0.75, 0.75, 0.25};
  Tensor k({channels, 4, 4});
  for (std::size_t c = 0; c < channels; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) k[(c * 4 + y) * 4 + x] = taps[y] * taps[x];
  return k;
}

namespace {

Tensor conv_weight(std::size_t out, std::size_t in, std::size_t k) { return Tensor({out, in, k, k}); }

void xavier_uniform(Tensor& w, std::mt19937_64& rng) {
  const double receptive = static_cast<double>(w.dim(2) * w.dim(3));
  const double limit = std::sqrt(6.0 / (receptive * (w.dim(0) + w.dim(1))));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : w.data()) v = dist(rng);
}

void xavier_normal(Tensor& w, std::mt19937_64& rng) {
  const double receptive = static_cast<double>(w.dim(2) * w.dim(3));
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / (receptive * (w.dim(0) + w.dim(1)))));
  for (double& v : w.data()) v = dist(rng);
}

TensorMap make_head(std::size_t in, std::size_t out) {
  return {{"score.weight", conv_weight(out, in, 1)},
          {"score.bias", Tensor({out})},
          {"up.kernel", bilinear_kernel(out)}};
}

}  // namespace

TinyNetParams zero_params(const Architecture& a) {
  TinyNetParams p;
  p.trunk = {{"conv1.weight", conv_weight(a.trunk1, a.in_channels, 3)},
             {"conv1.bias", Tensor({static_cast<std::size_t>(a.trunk1)})},
             {"conv2.weight", conv_weight(a.trunk2, a.trunk1, 3)},
             {"conv2.bias", Tensor({static_cast<std::size_t>(a.trunk2)})},
             {"conv3.weight", conv_weight(a.trunk3, a.trunk2, 3)},
             {"conv3.bias", Tensor({static_cast<std::size_t>(a.trunk3)})}};
  p.seg_head = make_head(a.trunk3, a.classes);
  p.sal_head = make_head(a.trunk3, 1);
  p.seg_head["up.kernel"].fill(0.0);
  p.sal_head["up.kernel"].fill(0.0);
  return p;
}

TinyNetParams init_params(const Architecture& a, std::uint64_t seed) {
  if (a.classes < 2) throw std::invalid_argument("segmentation head needs at least 2 classes");
  TinyNetParams p = zero_params(a);
  std::mt19937_64 rng(seed);
  for (const char* name : {"conv1.weight", "conv2.weight", "conv3.weight"})
    xavier_uniform(p.trunk.at(name), rng);
  xavier_normal(p.seg_head.at("score.weight"), rng);
  xavier_normal(p.sal_head.at("score.weight"), rng);
  p.seg_head["up.kernel"] = bilinear_kernel(a.classes);
  p.sal_head["up.kernel"] = bilinear_kernel(1);
  return p;
}

// --- Layers ----------------------------------------------------------------

namespace {

Tensor conv_forward(const Tensor& in, const Tensor& w, const Tensor& b) {
  kernels::Conv2dShape s;
  s.batch = static_cast<int>(in.dim(0));
  s.in_channels = static_cast<int>(in.dim(1));
  s.height = static_cast<int>(in.dim(2));
  s.width = static_cast<int>(in.dim(3));
  s.out_channels = static_cast<int>(w.dim(0));
  s.kernel = static_cast<int>(w.dim(2));
  if (w.dim(1) != in.dim(1)) throw ShapeError("conv: input channels do not match weights");
  Tensor out = Tensor::nchw(in.dim(0), w.dim(0), in.dim(2), in.dim(3));
  kernels::omp::conv2d_forward(s, in.data(), w.data(), b.data(), out.data());
  return out;
}

// Accumulates dW, db and (optionally) din for a "same"-padded convolution.
void conv_backward(const Tensor& in, const Tensor& w, const Tensor& dout, Tensor& dw, Tensor& db,
                   Tensor* din) {
  const int nb = static_cast<int>(in.dim(0)), ci_n = static_cast<int>(in.dim(1));
  const int h = static_cast<int>(in.dim(2)), wd = static_cast<int>(in.dim(3));
  const int co_n = static_cast<int>(w.dim(0)), k = static_cast<int>(w.dim(2)), pad = k / 2;

  dw = Tensor(w.shape());
  db = Tensor({static_cast<std::size_t>(co_n)});
#pragma omp parallel for schedule(static)
  for (int o = 0; o < co_n; ++o) {
    double bias_acc = 0;
    for (int n = 0; n < nb; ++n)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < wd; ++x) bias_acc += dout.at(n, o, y, x);
    db[o] = bias_acc;
    for (int ci = 0; ci < ci_n; ++ci)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          double acc = 0;
          for (int n = 0; n < nb; ++n)
            for (int y = 0; y < h; ++y) {
              const int iy = y + ky - pad;
              if (iy < 0 || iy >= h) continue;
              for (int x = 0; x < wd; ++x) {
                const int ix = x + kx - pad;
                if (ix < 0 || ix >= wd) continue;
                acc += dout.at(n, o, y, x) * in.at(n, ci, iy, ix);
              }
            }
          dw[((static_cast<std::size_t>(o) * ci_n + ci) * k + ky) * k + kx] = acc;
        }
  }
  if (!din) return;
  *din = Tensor(in.shape());
#pragma omp parallel for schedule(static)
  for (int job = 0; job < nb * ci_n; ++job) {
    const int n = job / ci_n, ci = job % ci_n;
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < wd; ++ix) {
        double acc = 0;
        for (int o = 0; o < co_n; ++o)
          for (int ky = 0; ky < k; ++ky) {
            const int y = iy - ky + pad;
            if (y < 0 || y >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int x = ix - kx + pad;
              if (x < 0 || x >= wd) continue;
              acc += dout.at(n, o, y, x) *
                     w[((static_cast<std::size_t>(o) * ci_n + ci) * k + ky) * k + kx];
            }
          }
        din->at(n, ci, iy, ix) = acc;
      }
  }
}

Tensor relu(const Tensor& z) {
  Tensor a = z;
  for (double& v : a.data()) v = v > 0 ? v : 0.0;
  return a;
}

void relu_backward(const Tensor& z, Tensor& grad) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(z[i] > 0)) grad[i] = 0.0;
}

Tensor maxpool_forward(const Tensor& in, std::vector<std::size_t>& argmax) {
  const std::size_t nb = in.dim(0), c = in.dim(1), h = in.dim(2) / 2, w = in.dim(3) / 2;
  Tensor out = Tensor::nchw(nb, c, h, w);
  argmax.assign(out.size(), 0);
  std::size_t o = 0;
  for (std::size_t n = 0; n < nb; ++n)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x, ++o) {
          std::size_t best = ((n * c + ch) * in.dim(2) + 2 * y) * in.dim(3) + 2 * x;
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = ((n * c + ch) * in.dim(2) + 2 * y + dy) * in.dim(3) + 2 * x + dx;
              if (in[idx] > in[best]) best = idx;
            }
          out[o] = in[best];
          argmax[o] = best;
        }
  return out;
}

struct UpTap {
  int src[2];
  int tap[2];
};

// Output row y of the cropped transposed convolution reads two input rows.
UpTap up_taps(int y, int in_size) {
  UpTap t{};
  const int lo = (y + 1) / 2;
  for (int j = 0; j < 2; ++j) {
    const int i = lo + j;  // index into the edge-padded input
    t.tap[j] = y + 3 - 2 * i;
    t.src[j] = std::clamp(i - 1, 0, in_size - 1);
  }
  return t;
}

void check_kernel(const Tensor& input, const Tensor& kernel) {
  if (kernel.rank() != 3 || kernel.dim(0) != input.dim(1) || kernel.dim(1) != 4 || kernel.dim(2) != 4)
    throw ShapeError("up-sampling kernel must be channels x 4 x 4");
}

void upsample_backward(const Tensor& input, const Tensor& kernel, const Tensor& dout,
                       Tensor& dinput, Tensor& dkernel) {
  const int nb = static_cast<int>(input.dim(0)), c = static_cast<int>(input.dim(1));
  const int h = static_cast<int>(input.dim(2)), w = static_cast<int>(input.dim(3));
  dinput = Tensor(input.shape());
  dkernel = Tensor(kernel.shape());
  for (int n = 0; n < nb; ++n)
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < 2 * h; ++y) {
        const UpTap ty = up_taps(y, h);
        for (int x = 0; x < 2 * w; ++x) {
          const UpTap tx = up_taps(x, w);
          const double g = dout.at(n, ch, y, x);
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              const std::size_t kidx = (static_cast<std::size_t>(ch) * 4 + ty.tap[a]) * 4 + tx.tap[b];
              dinput.at(n, ch, ty.src[a], tx.src[b]) += g * kernel[kidx];
              dkernel[kidx] += g * input.at(n, ch, ty.src[a], tx.src[b]);
            }
        }
      }
}

constexpr double kProbFloor = 1e-12;
constexpr double kSigmoidEps = 1e-12;

double sigmoid(double z) {
  const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(s, kSigmoidEps, 1.0 - kSigmoidEps);
}

Tensor softmax_channels(const Tensor& logits) {
  Tensor p(logits.shape());
  const std::size_t nb = logits.dim(0), c = logits.dim(1), h = logits.dim(2), w = logits.dim(3);
  for (std::size_t n = 0; n < nb; ++n)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double mx = logits.at(n, 0, y, x);
        for (std::size_t ch = 1; ch < c; ++ch) mx = std::max(mx, logits.at(n, ch, y, x));
        double sum = 0;
        for (std::size_t ch = 0; ch < c; ++ch) sum += (p.at(n, ch, y, x) = std::exp(logits.at(n, ch, y, x) - mx));
        for (std::size_t ch = 0; ch < c; ++ch) p.at(n, ch, y, x) /= sum;
      }
  return p;
}

struct ForwardCache {
  Tensor z1, a1, p1, z2, a2, z3, a3, score, logits, out;
  std::vector<std::size_t> argmax;
};

ForwardCache run_forward(const TinyNetParams& params, const Tensor& images, Head head) {
  if (images.rank() != 4) throw ShapeError("images must be N x C x H x W");
  if (images.dim(2) % 2 || images.dim(3) % 2 || images.dim(2) == 0 || images.dim(3) == 0)
    throw ShapeError("image height and width must be positive and even");
  const TensorMap& t = params.trunk;
  const TensorMap& hp = params.head(head);
  ForwardCache c;
  c.z1 = conv_forward(images, t.at("conv1.weight"), t.at("conv1.bias"));
  c.a1 = relu(c.z1);
  c.p1 = maxpool_forward(c.a1, c.argmax);
  c.z2 = conv_forward(c.p1, t.at("conv2.weight"), t.at("conv2.bias"));
  c.a2 = relu(c.z2);
  c.z3 = conv_forward(c.a2, t.at("conv3.weight"), t.at("conv3.bias"));
  c.a3 = relu(c.z3);
  c.score = conv_forward(c.a3, hp.at("score.weight"), hp.at("score.bias"));
  c.logits = upsample2x(c.score, hp.at("up.kernel"));
  if (head == Head::segmentation) {
    c.out = softmax_channels(c.logits);
  } else {
    c.out = c.logits;
    for (double& v : c.out.data()) v = sigmoid(v);
  }
  return c;
}

double resolve_normalizer(double normalizer, const Tensor& t) {
  return normalizer > 0 ? normalizer : static_cast<double>(t.dim(0));
}

}  // namespace

Tensor upsample2x(const Tensor& input, const Tensor& kernel) {
  check_kernel(input, kernel);
  const int nb = static_cast<int>(input.dim(0)), c = static_cast<int>(input.dim(1));
  const int h = static_cast<int>(input.dim(2)), w = static_cast<int>(input.dim(3));
  Tensor out = Tensor::nchw(nb, c, 2 * h, 2 * w);
  for (int n = 0; n < nb; ++n)
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < 2 * h; ++y) {
        const UpTap ty = up_taps(y, h);
        for (int x = 0; x < 2 * w; ++x) {
          const UpTap tx = up_taps(x, w);
          double acc = 0;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              acc += input.at(n, ch, ty.src[a], tx.src[b]) *
                     kernel[(static_cast<std::size_t>(ch) * 4 + ty.tap[a]) * 4 + tx.tap[b]];
          out.at(n, ch, y, x) = acc;
        }
      }
  return out;
}

Tensor forward(const TinyNetParams& params, const Tensor& images, Head head) {
  return run_forward(params, images, head).out;
}

double seg_loss(const Tensor& probs, const std::vector<int>& labels, double normalizer) {
  const std::size_t nb = probs.dim(0), c = probs.dim(1), h = probs.dim(2), w = probs.dim(3);
  if (labels.size() != nb * h * w) throw ShapeError("seg_loss: label count differs from pixels");
  double total = 0;
  std::size_t i = 0;
  for (std::size_t n = 0; n < nb; ++n)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x, ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= c)
          throw std::invalid_argument("seg_loss: class label out of range");
        total -= std::log(std::max(probs.at(n, label, y, x), kProbFloor));
      }
  return total / resolve_normalizer(normalizer, probs);
}

double sal_loss(const Tensor& pred, const Tensor& target, double normalizer) {
  if (pred.shape() != target.shape()) throw ShapeError("sal_loss: shapes differ");
  double total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = target[i] - pred[i];
    total += d * d;
  }
  return total / resolve_normalizer(normalizer, pred);
}

double batch_loss(const TinyNetParams& params, const TrainBatch& batch, double normalizer) {
  const Tensor out = forward(params, batch.images, batch.head);
  return batch.head == Head::segmentation ? seg_loss(out, batch.classes, normalizer)
                                          : sal_loss(out, batch.mask, normalizer);
}

Gradients backward(const TinyNetParams& params, const TrainBatch& batch, double normalizer) {
  const ForwardCache c = run_forward(params, batch.images, batch.head);
  const double norm = resolve_normalizer(normalizer, batch.images);
  const TensorMap& t = params.trunk;
  const TensorMap& hp = params.head(batch.head);

  Gradients g;
  g.head = batch.head;
  Tensor dlogits(c.logits.shape());
  if (batch.head == Head::segmentation) {
    g.loss = seg_loss(c.out, batch.classes, norm);
    const std::size_t nb = c.out.dim(0), cls = c.out.dim(1), h = c.out.dim(2), w = c.out.dim(3);
    std::size_t i = 0;
    for (std::size_t n = 0; n < nb; ++n)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x, ++i)
          for (std::size_t ch = 0; ch < cls; ++ch)
            dlogits.at(n, ch, y, x) =
                (c.out.at(n, ch, y, x) - (static_cast<int>(ch) == batch.classes[i] ? 1.0 : 0.0)) / norm;
  } else {
    g.loss = sal_loss(c.out, batch.mask, norm);
    for (std::size_t i = 0; i < dlogits.size(); ++i) {
      const double f = c.out[i];
      dlogits[i] = 2.0 * (f - batch.mask[i]) / norm * f * (1.0 - f);
    }
  }

  Tensor dscore, dk;
  upsample_backward(c.score, hp.at("up.kernel"), dlogits, dscore, dk);
  g.head_params["up.kernel"] = std::move(dk);

  Tensor da3, dw, db;
  conv_backward(c.a3, hp.at("score.weight"), dscore, dw, db, &da3);
  g.head_params["score.weight"] = std::move(dw);
  g.head_params["score.bias"] = std::move(db);

  relu_backward(c.z3, da3);
  Tensor da2;
  conv_backward(c.a2, t.at("conv3.weight"), da3, dw, db, &da2);
  g.trunk["conv3.weight"] = std::move(dw);
  g.trunk["conv3.bias"] = std::move(db);

  relu_backward(c.z2, da2);
  Tensor dp1;
  conv_backward(c.p1, t.at("conv2.weight"), da2, dw, db, &dp1);
  g.trunk["conv2.weight"] = std::move(dw);
  g.trunk["conv2.bias"] = std::move(db);

  Tensor da1(c.a1.shape());
  for (std::size_t o = 0; o < dp1.size(); ++o) da1[c.argmax[o]] += dp1[o];
  relu_backward(c.z1, da1);
  conv_backward(batch.images, t.at("conv1.weight"), da1, dw, db, nullptr);
  g.trunk["conv1.weight"] = std::move(dw);
  g.trunk["conv1.bias"] = std::move(db);
  return g;
}

void sgd_step(TensorMap& params, const TensorMap& grads, TensorMap& velocity,
              const SgdHyper& hyper) {
  for (const auto& [name, grad] : grads) {
    Tensor& p = params.at(name);
    if (p.shape() != grad.shape()) throw ShapeError("sgd_step: gradient shape differs for " + name);
    auto [it, inserted] = velocity.try_emplace(name, p.shape());
    Tensor& v = it->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = hyper.momentum * v[i] - hyper.lr * (grad[i] + hyper.weight_decay * p[i]);
      p[i] += v[i];
    }
  }
}

// --- Training ----------------------------------------------------------------

TrainBatch Dataset::batch(const std::vector<std::size_t>& indices) const {
  TrainBatch b;
  b.head = head;
  const std::size_t c = images.dim(1), h = images.dim(2), w = images.dim(3);
  const std::size_t plane = h * w;
  b.images = Tensor::nchw(indices.size(), c, h, w);
  if (head == Head::saliency) b.mask = Tensor::nchw(indices.size(), 1, h, w);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t src = indices[k];
    std::copy_n(images.data().begin() + static_cast<std::ptrdiff_t>(src * c * plane), c * plane,
                b.images.data().begin() + static_cast<std::ptrdiff_t>(k * c * plane));
    if (head == Head::segmentation)
      b.classes.insert(b.classes.end(), classes.begin() + static_cast<std::ptrdiff_t>(src * plane),
                       classes.begin() + static_cast<std::ptrdiff_t>((src + 1) * plane));
    else
      std::copy_n(masks.data().begin() + static_cast<std::ptrdiff_t>(src * plane), plane,
                  b.mask.data().begin() + static_cast<std::ptrdiff_t>(k * plane));
  }
  return b;
}

double dataset_loss(const TinyNetParams& params, const Dataset& data) {
  std::vector<std::size_t> all(data.count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return batch_loss(params, data.batch(all), static_cast<double>(all.size()));
}

namespace {

class EpochSampler {
 public:
  EpochSampler(std::size_t count, std::mt19937_64& rng) : rng_(rng), order_(count) {
    for (std::size_t i = 0; i < count; ++i) order_[i] = i;
    reshuffle();
  }

  std::vector<std::size_t> next(std::size_t batch) {
    std::vector<std::size_t> out;
    while (out.size() < batch) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    std::shuffle(order_.begin(), order_.end(), rng_);
    pos_ = 0;
  }

  std::mt19937_64& rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace

TinyNetParams alternate_train_from(TinyNetParams params, const Dataset& seg_data,
                                   const Dataset& sal_data, const TrainConfig& config,
                                   std::vector<LossRecord>* log, const PhaseObserver& observer) {
  if (seg_data.count() == 0 || sal_data.count() == 0)
    throw std::invalid_argument("alternate_train: both datasets must be non-empty");
  if (seg_data.head != Head::segmentation || sal_data.head != Head::saliency)
    throw std::invalid_argument("alternate_train: dataset heads are swapped");

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  EpochSampler seg_sampler(seg_data.count(), rng);
  EpochSampler sal_sampler(sal_data.count(), rng);
  const auto batch = static_cast<std::size_t>(std::max(1, config.batch_size));
  double last_finite = 0;

  for (int round = 0; round < config.rounds; ++round) {
    for (Head phase : {Head::segmentation, Head::saliency}) {
      const Dataset& data = phase == Head::segmentation ? seg_data : sal_data;
      EpochSampler& sampler = phase == Head::segmentation ? seg_sampler : sal_sampler;
      TensorMap trunk_velocity, head_velocity;
      for (int step = 0; step < config.steps_per_phase; ++step) {
        const Gradients g = backward(params, data.batch(sampler.next(batch)));
        if (!std::isfinite(g.loss))
          throw DivergenceError("training diverged in round " + std::to_string(round + 1) + " " +
                                    head_name(phase) + " phase at step " + std::to_string(step),
                                last_finite);
        last_finite = g.loss;
        if (log) log->push_back({round, phase, step, g.loss});
        sgd_step(params.trunk, g.trunk, trunk_velocity, config.hyper);
        sgd_step(params.head(phase), g.head_params, head_velocity, config.hyper);
      }
      if (observer) observer(round, phase, params);
    }
  }
  return params;
}

TinyNetParams alternate_train(const Dataset& seg_data, const Dataset& sal_data,
                              const TrainConfig& config, std::vector<LossRecord>* log,
                              const PhaseObserver& observer) {
  return alternate_train_from(init_params(config.arch, config.seed), seg_data, sal_data, config,
                              log, observer);
}

}  // namespace salreg::tinynet
