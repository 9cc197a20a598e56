#pragma once

#include <optional>
#include <vector>

#include "symkernel/biguint.hpp"
#include "symkernel/matrix.hpp"
#include "symkernel/strength.hpp"

namespace symkernel {

/// Dense l x l x m convolution kernel (m = 1 for the 2-D case).
/// Slice-major storage; integer-valued kernels stay exact in double.
struct Kernel {
  int side = 0;   // l
  int feats = 1;  // m
  std::vector<double> values;

  Kernel() = default;
  Kernel(int l, int m, double fill = 0.0)
      : side(l), feats(m), values(static_cast<std::size_t>(l) * l * m, fill) {}

  double& at(int i, int j, int k = 0) {
    return values[(static_cast<std::size_t>(k) * side + i) * side + j];
  }
  double at(int i, int j, int k = 0) const {
    return values[(static_cast<std::size_t>(k) * side + i) * side + j];
  }

  bool is_2d() const { return feats == 1; }

  Mat slice(int k) const;
  static Kernel from_slice(const Mat& m2d);

  bool integer_valued() const;
  bool ternary_valued() const;  // all entries in {-1,0,1}

  bool operator==(const Kernel&) const = default;
};

/// The tuple (f, rho, sigma1, sigma2, B). rho has one entry per feature
/// slice; the mask is binary when finalized and real in [0,1] while relaxed.
struct SymmetricKernelSpec {
  StrengthFunction f;
  std::vector<int> rho;  // entries in {1..4}, length m
  Permutation sigma1, sigma2;
  Kernel mask;  // B, same shape as the kernel

  int side() const { return mask.side; }
  int feats() const { return mask.feats; }

  void validate() const;  // throws Error(constraint) on any violated invariant
  bool mask_is_binary() const;
};

/// K[i][j] = B[i][j] * f(sigma1^(i-1)(sigma2^(j-1)(rho))); requires m == 1.
Kernel materialize_2d(const SymmetricKernelSpec& spec);

/// Slice k uses seed rho[k] and mask slice k.
Kernel materialize_3d(const SymmetricKernelSpec& spec);

/// materialize_2d / materialize_3d depending on m.
Kernel materialize(const SymmetricKernelSpec& spec);

/// P[i][j] = f(sigma1^(i-1)(sigma2^(j-1)(rho))), no mask. With f = identity
/// on labels this is the l x l type matrix G.
Mat pattern_matrix(const Permutation& sigma1, const Permutation& sigma2, int rho,
                   const StrengthFunction& f, int l);

/// Row-major l x l label matrix G[i][j] = sigma1^i(sigma2^j(rho)), 0-based
/// exponents. Does not re-check commutativity.
std::vector<int> orbit_labels(const Permutation& sigma1, const Permutation& sigma2,
                              int rho, int l);

/// Membership test: a witnessing spec (binary mask = nonzero indicator)
/// whose materialization equals K exactly, or nullopt.
std::optional<SymmetricKernelSpec> is_symmetric_kernel(const Kernel& k);

/// Number of parameter tuples: 120 * |f choices| * 4^m * 2^(m*l^2).
/// Tuples, not distinct kernels: the map to kernels is many-to-one.
BigUint count_family(int l, int m, bool ternary);

/// Exhaustive distinct-kernel count over all tuples; l <= 2 only.
long long count_distinct_kernels(int l, bool ternary);

}  // namespace symkernel
