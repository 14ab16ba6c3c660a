#include <algorithm>
#include <random>

#include "salreg/tinynet.hpp"

namespace salreg::tinynet {

// Bright disc on a darker textured ground. The two tasks see independent
// scene draws, mirroring separate segmentation and saliency corpora.
Dataset make_disc_dataset(Head head, std::size_t count, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 2 + (head == Head::segmentation ? 0 : 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto s = static_cast<std::size_t>(size);

  Dataset d;
  d.head = head;
  d.images = Tensor::nchw(count, 3, s, s);
  if (head == Head::saliency) d.masks = Tensor::nchw(count, 1, s, s);
  if (head == Head::segmentation) d.classes.assign(count * s * s, 0);

  for (std::size_t n = 0; n < count; ++n) {
    const double radius = size * (0.15 + 0.15 * unit(rng));
    const double cx = radius + (size - 2 * radius) * unit(rng);
    const double cy = radius + (size - 2 * radius) * unit(rng);
    double fg[3], bg[3];
    for (int c = 0; c < 3; ++c) {
      fg[c] = 0.6 + 0.4 * unit(rng);
      bg[c] = 0.35 * unit(rng);
    }
    for (std::size_t y = 0; y < s; ++y)
      for (std::size_t x = 0; x < s; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        const bool inside = dx * dx + dy * dy <= radius * radius;
        for (int c = 0; c < 3; ++c) {
          const double noise = 0.1 * (unit(rng) - 0.5);
          d.images.at(n, c, y, x) = std::clamp((inside ? fg[c] : bg[c]) + noise, 0.0, 1.0);
        }
        if (head == Head::saliency)
          d.masks.at(n, 0, y, x) = inside ? 1.0 : 0.0;
        else
          d.classes[(n * s + y) * s + x] = inside ? 1 : 0;
      }
  }
  return d;
}

}  // namespace salreg::tinynet
