#include "symkernel/toeplitz.hpp"

#include "symkernel/error.hpp"

namespace symkernel {

Mat conv2d_valid(const Mat& x, const Mat& k, int stride) {
  if (k.rows != k.cols) throw Error(ErrorCode::constraint, "kernel must be square");
  if (stride < 1) throw Error(ErrorCode::constraint, "stride must be positive");
  if (k.rows > x.rows || k.cols > x.cols)
    throw Error(ErrorCode::constraint, "kernel larger than input");
  const int l = k.rows;
  const int out_rows = (x.rows - l) / stride + 1;
  const int out_cols = (x.cols - l) / stride + 1;
  Mat y(out_rows, out_cols);
  for (int a = 0; a < out_rows; ++a)
    for (int b = 0; b < out_cols; ++b) {
      double acc = 0.0;
      for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j) acc += x(a * stride + i, b * stride + j) * k(i, j);
      y(a, b) = acc;
    }
  return y;
}

BlockToeplitz build_block_toeplitz(const Mat& k, int n) {
  if (k.rows != k.cols) throw Error(ErrorCode::constraint, "kernel must be square");
  const int l = k.rows;
  if (n < l) throw Error(ErrorCode::constraint, "input side must be >= kernel side");
  const int nout = n - l + 1;
  BlockToeplitz bt;
  bt.n = n;
  bt.l = l;
  bt.w = Mat(n * n, nout * nout);
  // Row (j-1)*n + (i-1) carries X[i][j] (column-major vectorization);
  // column (lc-1)*nout + (kr-1) carries output (kr, lc). X[i][j] contributes
  // K[i-kr+1][j-lc+1] whenever that index is inside the kernel.
  for (int lc = 1; lc <= nout; ++lc)
    for (int kr = 1; kr <= nout; ++kr) {
      const int col = (lc - 1) * nout + (kr - 1);
      for (int dj = 1; dj <= l; ++dj)
        for (int di = 1; di <= l; ++di) {
          const int i = kr + di - 1;
          const int j = lc + dj - 1;
          bt.w((j - 1) * n + (i - 1), col) = k(di - 1, dj - 1);
        }
    }
  return bt;
}

Mat nonzero_mask(const BlockToeplitz& bt) {
  const int n = bt.n, l = bt.l, nout = n - l + 1;
  Mat mask(n * n, nout * nout);
  for (int lc = 1; lc <= nout; ++lc)
    for (int kr = 1; kr <= nout; ++kr) {
      const int col = (lc - 1) * nout + (kr - 1);
      for (int dj = 1; dj <= l; ++dj)
        for (int di = 1; di <= l; ++di) {
          const int i = kr + di - 1;
          const int j = lc + dj - 1;
          mask((j - 1) * n + (i - 1), col) = 1.0;
        }
    }
  return mask;
}

}  // namespace symkernel
