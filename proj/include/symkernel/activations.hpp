#pragma once

#include <algorithm>

#include "symkernel/error.hpp"

namespace symkernel {

/// Bounded noisy ReLU: clamp(x + noise, 0, T). The caller draws the noise
/// (uniform on [-eps, eps]) so forward passes stay reproducible.
inline double noisy_relu_forward(double x, double t, double noise) {
  return std::clamp(x + noise, 0.0, t);
}

/// Binary threshold neuron: fires iff the pre-activation reaches T/2, the
/// midpoint of the noise interval the annealed ReLU ends at.
inline double threshold_forward(double x, double t) { return x >= t / 2 ? 1.0 : 0.0; }

/// Surrogate gradient shared by both neuron forms: the derivative of the
/// ReLU saturating at T.
inline double activation_backward(double x, double t) {
  return (x > 0.0 && x < t) ? 1.0 : 0.0;
}

enum class AnnealShape { linear, smoothstep };

/// Noise half-range at a given training progress: 0 at the start, T/2 at
/// the end, monotone in between.
inline double anneal(double progress, double t, AnnealShape shape = AnnealShape::linear) {
  if (t <= 0.0) throw Error(ErrorCode::constraint, "saturation level must be positive");
  const double p = std::clamp(progress, 0.0, 1.0);
  switch (shape) {
    case AnnealShape::linear: return p * t / 2;
    case AnnealShape::smoothstep: return (3 * p * p - 2 * p * p * p) * t / 2;
  }
  return p * t / 2;
}

}  // namespace symkernel
