#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "salreg/tensor.hpp"

namespace salreg::tinynet {

// Small multi-task fully convolutional network:
//
//   trunk   conv3x3(3->c1) relu | maxpool 2x2 | conv3x3(c1->c2) relu | conv3x3(c2->c3) relu
//   seg     conv1x1(c3->C) | 2x up-sampling | softmax over C
//   sal     conv1x1(c3->1) | 2x up-sampling | sigmoid
//
// The up-sampling layer is a per-channel transposed convolution with a
// learnable 4x4 kernel (stride 2) over an edge-replicated input, center
// cropped back to twice the input size. Its kernel starts as exact bilinear
// weights, so a constant map stays constant.

enum class Head { segmentation, saliency };

const char* head_name(Head head) noexcept;

struct Architecture {
  int in_channels = 3;
  int trunk1 = 8;
  int trunk2 = 12;
  int trunk3 = 12;
  int classes = 2;
};

struct TinyNetParams {
  TensorMap trunk;     // conv{1,2,3}.weight / .bias
  TensorMap seg_head;  // score.weight, score.bias, up.kernel
  TensorMap sal_head;  // score.weight, score.bias, up.kernel

  TensorMap& head(Head h) { return h == Head::segmentation ? seg_head : sal_head; }
  const TensorMap& head(Head h) const { return h == Head::segmentation ? seg_head : sal_head; }
  int classes() const { return static_cast<int>(seg_head.at("score.bias").size()); }

  bool operator==(const TinyNetParams&) const = default;
};

/// Xavier-uniform trunk, Xavier-normal 1x1 score layers, bilinear up-sampling kernels.
TinyNetParams init_params(const Architecture& arch, std::uint64_t seed);

/// Same shapes as init_params but every tensor zero.
TinyNetParams zero_params(const Architecture& arch);

/// 4x4 bilinear up-sampling kernel for factor 2.
Tensor bilinear_kernel(std::size_t channels);

/// Per-channel 2x up-sampling (forward only), exposed for tests.
Tensor upsample2x(const Tensor& input, const Tensor& kernel);

/// Class probabilities (seg: N x C x H x W) or saliency in (0,1) (sal: N x 1 x H x W).
/// Height and width must be even.
Tensor forward(const TinyNetParams& params, const Tensor& images, Head head);

/// -(1/N) sum over images and pixels of log p[label], p clamped at 1e-12.
/// `labels` holds one class index in [0, C) per pixel.
double seg_loss(const Tensor& probs, const std::vector<int>& labels, double normalizer = 0);

/// (1/N) sum over images of ||M - f||_F^2.
double sal_loss(const Tensor& pred, const Tensor& target, double normalizer = 0);

/// One minibatch for either task. Segmentation batches fill `classes`,
/// saliency batches fill `mask` (values in [0,1]; training data is binary).
struct TrainBatch {
  Head head = Head::saliency;
  Tensor images;
  std::vector<int> classes;
  Tensor mask;
};

struct Gradients {
  Head head = Head::saliency;
  double loss = 0;
  TensorMap trunk;
  TensorMap head_params;
};

/// Loss and exact gradients w.r.t. the trunk and the batch's head.
/// `normalizer` is the N of the loss (defaults to the batch size).
Gradients backward(const TinyNetParams& params, const TrainBatch& batch, double normalizer = 0);

double batch_loss(const TinyNetParams& params, const TrainBatch& batch, double normalizer = 0);

struct SgdHyper {
  double lr = 1e-4;
  double momentum = 0.99;
  double weight_decay = 5e-4;
};

/// v <- momentum v - lr (g + wd p); p <- p + v, for every tensor in `grads`.
/// Tensors absent from `grads` are left untouched.
void sgd_step(TensorMap& params, const TensorMap& grads, TensorMap& velocity,
              const SgdHyper& hyper);

struct Dataset {
  Head head = Head::saliency;
  Tensor images;               // N x 3 x H x W
  std::vector<int> classes;    // segmentation: N*H*W labels
  Tensor masks;                // saliency: N x 1 x H x W
  std::size_t count() const { return images.rank() ? images.dim(0) : 0; }
  TrainBatch batch(const std::vector<std::size_t>& indices) const;
};

/// Synthetic disc scenes: class 1 / salient = disc, class 0 = ground.
Dataset make_disc_dataset(Head head, std::size_t count, int size, std::uint64_t seed);

/// Dataset-level loss J (normalizer = dataset size).
double dataset_loss(const TinyNetParams& params, const Dataset& data);

struct TrainConfig {
  Architecture arch;
  int rounds = 3;
  int steps_per_phase = 200;
  int batch_size = 16;
  SgdHyper hyper;
  std::uint64_t seed = 42;
};

struct LossRecord {
  int round = 0;
  Head phase = Head::segmentation;
  int step = 0;
  double loss = 0;
};

using PhaseObserver = std::function<void(int round, Head phase, const TinyNetParams&)>;

/// Alternating schedule: per round, one segmentation phase updating
/// (trunk, seg head) then one saliency phase updating (trunk, sal head).
/// Velocities restart at every phase. Throws DivergenceError on a
/// non-finite loss. `observer`, when set, sees the parameters after each phase.
TinyNetParams alternate_train(const Dataset& seg_data, const Dataset& sal_data,
                              const TrainConfig& config, std::vector<LossRecord>* log = nullptr,
                              const PhaseObserver& observer = {});

TinyNetParams alternate_train_from(TinyNetParams params, const Dataset& seg_data,
                                   const Dataset& sal_data, const TrainConfig& config,
                                   std::vector<LossRecord>* log = nullptr,
                                   const PhaseObserver& observer = {});

// --- Checkpoints ---------------------------------------------------------
//
// "TNET1", then per tensor until EOF: u32 name length, name bytes, u32 rank,
// rank x u64 dims, values as little-endian IEEE-754 doubles. Names carry a
// "trunk.", "seg." or "sal." prefix.

void save_checkpoint(const TinyNetParams& params, const std::filesystem::path& path);
TinyNetParams load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const TinyNetParams& params);
TinyNetParams decode_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace salreg::tinynet
