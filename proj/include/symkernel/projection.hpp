#pragma once

#include <cstdint>
#include <vector>

#include "symkernel/kernel.hpp"

namespace symkernel {

struct ProjectionResult {
  SymmetricKernelSpec spec;  // mask real-valued in [0,1]
  double distance = 0.0;     // Frobenius norm of K - materialize(spec), recomputed
  long long candidates_examined = 0;
  std::vector<double> iteration_distances;  // alternating mode only
};

/// Elementwise minimizer of sum_p (K[p] - B[p]*pattern[p])^2 over
/// B in [0,1]: clamp(K/pattern, 0, 1) where pattern is nonzero, else 0.
Kernel optimal_mask(const Kernel& k, const Kernel& pattern);

/// Exact minimizer of || K - sym(f, rho, s1, s2, B) ||_F over all commuting
/// pairs, f in f_choices, per-slice seeds and box-constrained B. Slices share
/// only (s1, s2, f), so each rho_k is chosen independently: 120*|F|*4*m
/// candidates instead of 120*|F|*4^m. Ties break lexicographically on
/// (sigma1, sigma2, f, rho).
ProjectionResult project_exact(const Kernel& k,
                               const std::vector<StrengthFunction>& f_choices);
ProjectionResult project_exact(const Kernel& k);  // 16 ternary tables

/// Serial reference for the OpenMP candidate scan; identical result.
ProjectionResult project_exact_serial(const Kernel& k,
                                      const std::vector<StrengthFunction>& f_choices);

/// Alternating (EM-style) search: a structure sweep over (sigma1, sigma2)
/// with closed-form per-label strength fitting, alternated with per-slice
/// seed and table refinement. Monotone nonincreasing distance per iteration;
/// stops at a fixpoint or after max_iters. May end above the exact minimum.
ProjectionResult project_alternating(const Kernel& k,
                                     const std::vector<StrengthFunction>& f_choices,
                                     int max_iters, std::uint64_t seed);

/// 1 where B >= threshold, else 0.
Kernel binarize_mask(const Kernel& mask, double threshold);

double frobenius_distance(const Kernel& a, const Kernel& b);

}  // namespace symkernel
