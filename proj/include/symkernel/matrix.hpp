#pragma once

#include <cassert>
#include <vector>

namespace symkernel {

// Dense row-major matrix. Integer-valued data stays exact: only + and *
// are applied, well below the 2^53 limit of double.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  bool operator==(const Mat&) const = default;
};

// vect(Y): concatenation of columns.
inline std::vector<double> vectorize(const Mat& y) {
  std::vector<double> v;
  v.reserve(y.data.size());
  for (int c = 0; c < y.cols; ++c)
    for (int r = 0; r < y.rows; ++r) v.push_back(y(r, c));
  return v;
}

inline Mat unvectorize(const std::vector<double>& v, int rows, int cols) {
  assert(static_cast<int>(v.size()) == rows * cols);
  Mat y(rows, cols);
  std::size_t k = 0;
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) y(r, c) = v[k++];
  return y;
}

// v^t * W
inline std::vector<double> row_times_matrix(const std::vector<double>& v, const Mat& w) {
  assert(static_cast<int>(v.size()) == w.rows);
  std::vector<double> out(w.cols, 0.0);
  for (int r = 0; r < w.rows; ++r) {
    const double x = v[r];
    if (x == 0.0) continue;
    for (int c = 0; c < w.cols; ++c) out[c] += x * w(r, c);
  }
  return out;
}

}  // namespace symkernel
