#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "symkernel/error.hpp"
#include "symkernel/kernel.hpp"
#include "symkernel/matrix.hpp"

namespace symkernel {

/// A crossbar core program: the factorization M(g, C, {s_r}) of one core's
/// weight matrix into a type vector, a binary connectivity matrix, and one
/// 4-entry strength table per neuron.
///
/// Input lines carry the m slices of a vectorized n x n input, slice-major,
/// column-major within a slice. Neuron r (0-based) computes output position
/// (kr, lc) with r = (lc-1)*(n-l+1) + (kr-1).
struct CoreProgram {
  int n = 0;
  int l = 0;
  int m = 1;
  std::vector<int> g;                       // m*n^2 input types in {1..4}
  std::vector<std::uint8_t> connectivity;   // (m*n^2) x (n-l+1)^2, row-major
  std::vector<StrengthFunction> strengths;  // (n-l+1)^2 tables

  int input_lines() const { return m * n * n; }
  int neurons() const { return (n - l + 1) * (n - l + 1); }

  std::uint8_t conn(int row, int col) const {
    return connectivity[static_cast<std::size_t>(row) * neurons() + col];
  }
};

/// Core capacity and range diagnostics; empty means the program fits the
/// 256-line / 256-neuron crossbar with in-range tables and types.
std::vector<std::string> check_core_constraints(const CoreProgram& program);

/// Lower a symmetric-kernel spec (binary mask) onto a core program with
/// assemble_weight_matrix(compile(spec, n)) == W(materialize(spec), n).
CoreProgram compile(const SymmetricKernelSpec& spec, int n);

/// M = [s_1(g) ... s_N(g)] o C, dense.
Mat assemble_weight_matrix(const CoreProgram& program);

/// vect(X)^t * M without materializing M. One Mat per feature slice.
std::vector<double> simulate_core(const CoreProgram& program, const std::vector<Mat>& x);
std::vector<double> simulate_core(const CoreProgram& program, const Mat& x);
std::vector<double> simulate_core_serial(const CoreProgram& program, const std::vector<Mat>& x);

struct Conflict {
  int row_a = -1;  // row that established the clashing assignment
  int row_b = -1;  // row that exposed the clash
  int col = -1;
};

struct Coloring {
  std::vector<int> colors;  // per input row; 0 = unassigned, else 1..4
  std::optional<Conflict> conflict;
  int colors_used = 0;
};

class NotRepresentableError : public Error {
 public:
  explicit NotRepresentableError(std::string message, Conflict conflict = {})
      : Error(ErrorCode::not_representable, std::move(message)), conflict_(conflict) {}
  const Conflict& conflict() const { return conflict_; }

 private:
  Conflict conflict_;
};

/// Color the rows of a W(K)-shaped target, columns processed left to right,
/// so that no two same-colored rows carry distinct nonzero values in any
/// column. A row takes the lowest color already bound to its value in the
/// current column, else the lowest unused color; ambiguous rows stay
/// uncolored until a later column decides them. First conflict is reported.
Coloring greedy_color(const Mat& target, int n, int l);

/// Recover (f, rho, sigma1, sigma2, B = all-ones) from a kernel with at
/// least four distinct entries and no zeros, via coloring of W(K) and
/// sigma1 = s2^-1 . s1, sigma2 = s_{nout+1}^-1 . s1.
SymmetricKernelSpec decompile(const Kernel& k, int n);

}  // namespace symkernel
