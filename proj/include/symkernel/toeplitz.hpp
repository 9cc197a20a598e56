#pragma once

#include "symkernel/matrix.hpp"

namespace symkernel {

/// Valid (no padding) sliding-product convolution:
/// Y[a][b] = sum_{i,j} X[a*s + i][b*s + j] * K[i][j], output side
/// floor((n-l)/s)+1. The kernel is laid on top of the input window; no flip.
Mat conv2d_valid(const Mat& x, const Mat& k, int stride = 1);

/// The block Toeplitz convolution matrix W(K):
/// vect(X * K)^t = vect(X)^t W for every n x n input X, stride 1.
/// W is n^2 x (n-l+1)^2; column r = (lc-1)*(n-l+1) + kr (1-based) holds
/// output position (kr, lc).
struct BlockToeplitz {
  int n = 0;
  int l = 0;
  Mat w;
};

BlockToeplitz build_block_toeplitz(const Mat& k, int n);

/// Structural-position mask of W: 1 wherever the entry is a kernel
/// coefficient slot, independent of the kernel's values.
Mat nonzero_mask(const BlockToeplitz& bt);

}  // namespace symkernel
