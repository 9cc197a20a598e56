#include "symkernel/core.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "symkernel/toeplitz.hpp"

namespace symkernel {

std::vector<std::string> check_core_constraints(const CoreProgram& program) {
  std::vector<std::string> diags;
  std::ostringstream os;
  if (program.input_lines() > 256) {
    os << "input lines exceed core capacity: " << program.input_lines() << " > 256";
    diags.push_back(os.str());
    os.str("");
  }
  if (program.neurons() > 256) {
    os << "neurons exceed core capacity: " << program.neurons() << " > 256";
    diags.push_back(os.str());
    os.str("");
  }
  for (std::size_t r = 0; r < program.strengths.size(); ++r) {
    if (!program.strengths[r].in_range()) {
      os << "strength table " << r << " has values outside [-255,255]";
      diags.push_back(os.str());
      os.str("");
    }
  }
  for (std::size_t i = 0; i < program.g.size(); ++i) {
    if (program.g[i] < 1 || program.g[i] > 4) {
      os << "input type at line " << i << " outside {1,2,3,4}";
      diags.push_back(os.str());
      os.str("");
    }
  }
  return diags;
}

CoreProgram compile(const SymmetricKernelSpec& spec, int n) {
  spec.validate();
  if (!spec.mask_is_binary())
    throw Error(ErrorCode::constraint, "compile requires a finalized binary mask");
  const int l = spec.side();
  const int m = spec.feats();
  if (n < l) throw Error(ErrorCode::constraint, "input side must be >= kernel side");
  const int nout = n - l + 1;
  if (m * n * n > 256 || nout * nout > 256) {
    std::ostringstream os;
    os << "core capacity exceeded: " << m * n * n << " input lines, " << nout * nout
       << " neurons (limit 256 each)";
    throw Error(ErrorCode::constraint, os.str());
  }

  CoreProgram prog;
  prog.n = n;
  prog.l = l;
  prog.m = m;

  // Type vector: vect(G_k) per slice, G_k[i][j] = s1^(i-1)(s2^(j-1)(rho_k)).
  prog.g.resize(static_cast<std::size_t>(m) * n * n);
  for (int k = 0; k < m; ++k) {
    Mat gk = pattern_matrix(spec.sigma1, spec.sigma2, spec.rho[k],
                            StrengthFunction{{1, 2, 3, 4}}, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        prog.g[static_cast<std::size_t>(k) * n * n + j * n + i] =
            static_cast<int>(gk(i, j));
  }

  // Connectivity: column r places the mask window of every slice at the
  // output's offset. Strengths: s_r = f . (s1^(kr-1))^-1 . (s2^(lc-1))^-1,
  // shared across slices.
  prog.connectivity.assign(static_cast<std::size_t>(prog.input_lines()) * prog.neurons(), 0);
  prog.strengths.resize(prog.neurons());
  for (int lc = 1; lc <= nout; ++lc) {
    const Permutation undo_col = inverse(power(spec.sigma2, lc - 1));
    for (int kr = 1; kr <= nout; ++kr) {
      const int col = (lc - 1) * nout + (kr - 1);
      prog.strengths[col] =
          precompose(spec.f, compose(inverse(power(spec.sigma1, kr - 1)), undo_col));
      for (int k = 0; k < m; ++k)
        for (int dj = 1; dj <= l; ++dj)
          for (int di = 1; di <= l; ++di) {
            const int row = k * n * n + (lc + dj - 2) * n + (kr + di - 2);
            prog.connectivity[static_cast<std::size_t>(row) * prog.neurons() + col] =
                spec.mask.at(di - 1, dj - 1, k) != 0.0 ? 1 : 0;
          }
    }
  }
  return prog;
}

Mat assemble_weight_matrix(const CoreProgram& program) {
  const int rows = program.input_lines();
  const int cols = program.neurons();
  Mat m(rows, cols);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < cols; ++c) {
    const StrengthFunction& s = program.strengths[c];
    for (int r = 0; r < rows; ++r)
      if (program.conn(r, c)) m(r, c) = s(program.g[r]);
  }
  return m;
}

namespace {

std::vector<double> flatten_input(const CoreProgram& program, const std::vector<Mat>& x) {
  if (static_cast<int>(x.size()) != program.m)
    throw Error(ErrorCode::constraint, "input slice count does not match the program");
  std::vector<double> v;
  v.reserve(program.input_lines());
  for (const Mat& slice : x) {
    if (slice.rows != program.n || slice.cols != program.n)
      throw Error(ErrorCode::constraint, "input shape does not match the program");
    for (int j = 0; j < program.n; ++j)
      for (int i = 0; i < program.n; ++i) v.push_back(slice(i, j));
  }
  return v;
}

}  // namespace

std::vector<double> simulate_core(const CoreProgram& program, const std::vector<Mat>& x) {
  const std::vector<double> v = flatten_input(program, x);
  const int rows = program.input_lines();
  const int cols = program.neurons();
  std::vector<double> out(cols, 0.0);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < cols; ++c) {
    const StrengthFunction& s = program.strengths[c];
    double acc = 0.0;
    for (int r = 0; r < rows; ++r)
      if (program.conn(r, c)) acc += v[r] * s(program.g[r]);
    out[c] = acc;
  }
  return out;
}

std::vector<double> simulate_core(const CoreProgram& program, const Mat& x) {
  return simulate_core(program, std::vector<Mat>{x});
}

std::vector<double> simulate_core_serial(const CoreProgram& program,
                                         const std::vector<Mat>& x) {
  const std::vector<double> v = flatten_input(program, x);
  const int rows = program.input_lines();
  const int cols = program.neurons();
  std::vector<double> out(cols, 0.0);
  for (int c = 0; c < cols; ++c) {
    const StrengthFunction& s = program.strengths[c];
    double acc = 0.0;
    for (int r = 0; r < rows; ++r)
      if (program.conn(r, c)) acc += v[r] * s(program.g[r]);
    out[c] = acc;
  }
  return out;
}

Coloring greedy_color(const Mat& target, int n, int l) {
  if (target.rows != n * n || target.cols != (n - l + 1) * (n - l + 1))
    throw Error(ErrorCode::constraint, "target shape does not match (n, l)");
  Coloring coloring;
  coloring.colors.assign(target.rows, 0);

  // Column-by-column, left to right. Within a column, already-colored rows
  // establish the color/value bindings first; uncolored rows then take the
  // lowest color carrying their value, or a fresh color when one is left.
  // A row whose value matches nothing while all four colors exist stays
  // uncolored until a later column pins it down, so the whole sweep repeats
  // until no assignment changes.
  bool progress = true;
  while (progress) {
    progress = false;
    for (int c = 0; c < target.cols; ++c) {
      std::array<bool, 4> bound{};
      std::array<double, 4> value{};
      std::array<int, 4> origin{};
      // colored rows: consistency check + bindings
      for (int r = 0; r < target.rows; ++r) {
        const double v = target(r, c);
        if (v == 0.0 || coloring.colors[r] == 0) continue;
        const int ci = coloring.colors[r] - 1;
        if (!bound[ci]) {
          bound[ci] = true;
          value[ci] = v;
          origin[ci] = r;
        } else if (value[ci] != v) {
          coloring.conflict = Conflict{origin[ci], r, c};
          return coloring;
        }
      }
      // uncolored rows: match a binding, else claim a fresh color
      for (int r = 0; r < target.rows; ++r) {
        const double v = target(r, c);
        if (v == 0.0 || coloring.colors[r] != 0) continue;
        int color = 0;
        for (int ci = 0; ci < 4 && color == 0; ++ci)
          if (bound[ci] && value[ci] == v) color = ci + 1;
        if (color == 0 && coloring.colors_used < 4) {
          color = ++coloring.colors_used;
          bound[color - 1] = true;
          value[color - 1] = v;
          origin[color - 1] = r;
        }
        if (color == 0) {
          if (bound[0] && bound[1] && bound[2] && bound[3]) {
            // four distinct values already bound: a fifth cannot fit
            coloring.conflict = Conflict{origin[0], r, c};
            return coloring;
          }
          continue;  // ambiguous here; defer to a later column
        }
        coloring.colors[r] = color;
        progress = true;
      }
    }
  }
  return coloring;
}

namespace {

// Strength table of one target column under a conflict-free coloring:
// table[color-1] = the unique nonzero value rows of that color carry.
std::array<double, 4> column_table(const Mat& target, const std::vector<int>& colors,
                                   int col) {
  std::array<double, 4> table{};
  std::array<bool, 4> seen{};
  for (int r = 0; r < target.rows; ++r) {
    const double v = target(r, col);
    if (v == 0.0) continue;
    const int ci = colors[r] - 1;
    if (!seen[ci]) {
      seen[ci] = true;
      table[ci] = v;
    }
  }
  for (int ci = 0; ci < 4; ++ci)
    if (!seen[ci])
      throw NotRepresentableError("a strength table is underdetermined; kernel "
                                  "does not expose all four types");
  return table;
}

// y with s[y] == target_value
int invert_table(const std::array<double, 4>& s, double target_value) {
  for (int y = 1; y <= 4; ++y)
    if (s[y - 1] == target_value) return y;
  throw NotRepresentableError("strength tables are not compatible bijections");
}

}  // namespace

SymmetricKernelSpec decompile(const Kernel& k, int n) {
  if (!k.is_2d()) throw Error(ErrorCode::constraint, "decompile expects a 2-D kernel");
  const int l = k.side;
  if (n < l + 1)
    throw Error(ErrorCode::constraint, "decompile needs n >= l+1 to read sigma2");

  std::set<double> distinct(k.values.begin(), k.values.end());
  for (double v : k.values) {
    if (v == 0.0)
      throw Error(ErrorCode::constraint, "decompile requires a zero-free kernel");
    if (v != std::floor(v) || v < -255.0 || v > 255.0)
      throw NotRepresentableError("kernel values cannot be held by an 8-bit strength table");
  }
  if (distinct.size() < 4)
    throw Error(ErrorCode::constraint,
                "decompile requires at least four distinct kernel entries");

  const BlockToeplitz bt = build_block_toeplitz(k.slice(0), n);
  const Coloring coloring = greedy_color(bt.w, n, l);

  // The membership search is the fallback wherever the coloring route does
  // not produce a witness; a zero-free kernel yields an all-ones mask there.
  auto fallback_or = [&](NotRepresentableError err) -> SymmetricKernelSpec {
    if (auto witness = is_symmetric_kernel(k)) return *witness;
    throw err;
  };

  if (coloring.conflict) {
    const Conflict& cf = *coloring.conflict;
    std::ostringstream os;
    os << "kernel is not representable: rows " << cf.row_a << " and " << cf.row_b
       << " clash in column " << cf.col;
    return fallback_or(NotRepresentableError(os.str(), cf));
  }
  for (int color : coloring.colors)
    if (color == 0)
      return fallback_or(
          NotRepresentableError("coloring stalled before covering every input row"));

  try {
    const int nout = n - l + 1;
    const auto s1 = column_table(bt.w, coloring.colors, 0);         // output (1,1)
    const auto s2 = column_table(bt.w, coloring.colors, 1);         // output (2,1)
    const auto s_next = column_table(bt.w, coloring.colors, nout);  // output (1,2)

    StrengthFunction f;
    for (int ci = 0; ci < 4; ++ci) f.table[ci] = static_cast<int>(s1[ci]);

    // sigma1 = s2^-1 . s1 and sigma2 = s_{nout+1}^-1 . s1.
    std::array<int, 4> img1{}, img2{};
    for (int x = 1; x <= 4; ++x) {
      img1[x - 1] = invert_table(s2, s1[x - 1]);
      img2[x - 1] = invert_table(s_next, s1[x - 1]);
    }
    Permutation sigma1, sigma2;
    try {
      sigma1 = Permutation::from_image(img1);
      sigma2 = Permutation::from_image(img2);
    } catch (const Error&) {
      throw NotRepresentableError("recovered type transitions are not bijections");
    }
    if (!commutes(sigma1, sigma2))
      throw NotRepresentableError("recovered permutations do not commute");

    SymmetricKernelSpec spec{f, {coloring.colors[0]}, sigma1, sigma2, Kernel(l, 1, 1.0)};
    if (!(materialize(spec) == k))
      throw NotRepresentableError("recovered spec does not re-materialize the kernel");
    return spec;
  } catch (const NotRepresentableError& e) {
    return fallback_or(e);
  }
}

}  // namespace symkernel
