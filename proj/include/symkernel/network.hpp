#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "symkernel/kernel.hpp"

namespace symkernel {

enum class WeightMode { unconstrained, relaxed_symmetric, frozen_symmetric };
enum class ActivationMode { noisy_relu, threshold };

struct LayerSpec {
  int patch = 3;
  int stride = 1;
  int in_features = 1;
  int out_features = 1;
  int groups = 1;
};

/// Frozen part of a projected kernel; the mask stays trainable.
struct SymmetricStructure {
  StrengthFunction f;
  std::vector<int> rho;
  Permutation sigma1, sigma2;
};

struct Layer {
  LayerSpec spec;
  WeightMode wmode = WeightMode::unconstrained;
  ActivationMode amode = ActivationMode::noisy_relu;

  // One kernel per output feature, patch x patch x (in/groups). `weights`
  // always holds the effective values; for symmetric modes it is the
  // materialized mask * pattern and is refreshed after mask updates.
  std::vector<Kernel> weights;
  std::vector<SymmetricStructure> structure;  // symmetric modes
  std::vector<Kernel> mask;                   // symmetric modes
  std::vector<Kernel> pattern;                // cached f(labels), symmetric modes

  // Per-feature batch normalization.
  std::vector<double> gamma, beta, run_mean, run_var;

  int in_per_group() const { return spec.in_features / spec.groups; }
  int out_per_group() const { return spec.out_features / spec.groups; }
};

struct NetworkSpec {
  int in_h = 8, in_w = 8, in_c = 1;
  int num_classes = 2;
  double t = 1.0;  // activation saturation level
  std::vector<LayerSpec> layers;

  /// Group divisibility, per-group core capacity, spatial fit, classifier
  /// partition. Throws Error(constraint).
  void validate() const;

  /// (h, w, c) after each layer, valid convolution.
  std::vector<std::array<int, 3>> output_shapes() const;
};

struct Network {
  NetworkSpec spec;
  std::vector<Layer> layers;
};

/// Fresh unconstrained network with seeded uniform weight init and
/// mid-range batch-norm affine (gamma = T/4, beta = T/2).
Network build_network(const NetworkSpec& spec, std::uint64_t seed);

/// Recompute materialized weights of a symmetric-mode layer from its
/// structure and mask.
void refresh_materialized_weights(Layer& layer);

}  // namespace symkernel
