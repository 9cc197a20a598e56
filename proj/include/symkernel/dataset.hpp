#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace symkernel {

/// Labeled image set, CHW layout, pixel values in [0,1].
struct Dataset {
  int height = 0;
  int width = 0;
  int channels = 0;
  int num_classes = 0;
  std::vector<std::vector<double>> images;
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
};

/// Self-generating 8x8 two-class task: class 0 is bright on top, class 1
/// bright at the bottom, plus per-pixel uniform noise. Linearly separable.
Dataset make_synthetic_two_class(int count, std::uint64_t seed);

/// CIFAR-10 binary batches: 3073-byte records, one label byte then
/// 1024 R + 1024 G + 1024 B bytes. limit < 0 reads everything.
Dataset load_cifar10(const std::vector<std::string>& files, int limit = -1);

}  // namespace symkernel
