#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symkernel/activations.hpp"
#include "symkernel/dataset.hpp"
#include "symkernel/network.hpp"

namespace symkernel {

struct Hyperparameters {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-6;
  int batch_size = 32;
  double dropout = 0.0;
  std::uint64_t seed = 1;
};

/// Staged pipeline: unconstrained training under noise annealing, then
/// per-layer replacement by projected symmetric kernels (structure frozen,
/// mask trainable), gradual mask binarization, and a layer-by-layer swap of
/// noisy ReLUs for threshold neurons.
struct ReplacementPlan {
  int warmup_epochs = 4;
  int replace_gap = 1;     // epochs between consecutive layer replacements, >= 1
  int binarize_epochs = 2; // mask-hardening period before the snap
  int threshold_gap = 1;   // epochs between activation swaps, >= 1
  int finetune_epochs = 2; // epochs after the last swap
  AnnealShape anneal_shape = AnnealShape::linear;
  int stage_limit = 4;     // 1 warmup only .. 4 full pipeline
};

/// Epoch boundaries derived from a plan; all indices are epoch numbers.
struct Schedule {
  std::vector<int> replace_epoch;  // per layer
  int binarize_start = 0;
  int snap_epoch = 0;
  std::vector<int> swap_epoch;     // per layer
  int total_epochs = 0;
  int anneal_span = 0;             // epsilon reaches T/2 here

  int stage_of(int epoch) const;
};

Schedule make_schedule(const ReplacementPlan& plan, int num_layers);

struct EpochEvent {
  std::string kind;  // "replace" | "snap" | "swap"
  int layer = -1;
  double projection_distance = 0.0;  // mean over the layer's kernels (replace)
};

struct EpochMetrics {
  int epoch = 0;
  int stage = 1;
  double epsilon = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;
  double sparsity = 0.0;   // fraction of nonzero activations, eval pass
  double mask_min = 0.0;   // over all relaxed masks; 0/1 when none
  double mask_max = 1.0;
  std::vector<EpochEvent> events;
};

struct TrainResult {
  Network net;
  std::vector<EpochMetrics> metrics;
};

TrainResult train(const NetworkSpec& spec, const Dataset& data,
                  const Hyperparameters& hp, const ReplacementPlan& plan);

double evaluate_accuracy(const Network& net, const Dataset& data);

/// Fraction of 1-valued activations over all binary neurons and samples.
/// Requires every layer in threshold mode.
double measure_sparsity(const Network& net, const Dataset& data);

/// Per-layer activation vectors for one image, eval mode.
std::vector<std::vector<double>> forward_traces(const Network& net,
                                                const std::vector<double>& image);

/// Core-count estimate: sum over layers of groups x spatial tiles, each tile
/// sized to the 256-line / 256-neuron limits. Requires every layer frozen.
long long estimate_cores(const Network& net);

// ---- gradient-check support ----------------------------------------------

/// Pointers to every trainable parameter in a stable order (per layer:
/// weights or masks, then gamma, then beta).
std::vector<double*> trainable_parameters(Network& net);

/// Mean cross-entropy over the whole set, training-statistics forward with
/// zero noise and no dropout; running stats untouched.
double batch_loss(const Network& net, const Dataset& data);

/// Backprop gradients of batch_loss in trainable_parameters order.
std::vector<double> batch_gradients(const Network& net, const Dataset& data);

/// Smallest distance of any pre-activation to the kinks {0, T} under the
/// batch_loss forward pass.
double min_kink_distance(const Network& net, const Dataset& data);

}  // namespace symkernel
