#include "symkernel/kernel.hpp"

#include <cmath>
#include <set>

#include "symkernel/error.hpp"

namespace symkernel {

Mat Kernel::slice(int k) const {
  Mat out(side, side);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) out(i, j) = at(i, j, k);
  return out;
}

Kernel Kernel::from_slice(const Mat& m2d) {
  if (m2d.rows != m2d.cols)
    throw Error(ErrorCode::constraint, "kernel slice must be square");
  Kernel k(m2d.rows, 1);
  for (int i = 0; i < m2d.rows; ++i)
    for (int j = 0; j < m2d.cols; ++j) k.at(i, j) = m2d(i, j);
  return k;
}

bool Kernel::integer_valued() const {
  for (double v : values)
    if (v != std::floor(v)) return false;
  return true;
}

bool Kernel::ternary_valued() const {
  for (double v : values)
    if (v != -1.0 && v != 0.0 && v != 1.0) return false;
  return true;
}

void SymmetricKernelSpec::validate() const {
  if (mask.side < 1) throw Error(ErrorCode::constraint, "kernel side must be >= 1");
  if (static_cast<int>(rho.size()) != mask.feats)
    throw Error(ErrorCode::constraint, "rho length must equal the feature count");
  for (int r : rho)
    if (r < 1 || r > 4) throw Error(ErrorCode::constraint, "rho entries must be in {1,2,3,4}");
  if (!f.in_range())
    throw Error(ErrorCode::constraint, "strength values must lie in [-255,255]");
  if (!commutes(sigma1, sigma2))
    throw Error(ErrorCode::constraint, "sigma1 and sigma2 must commute");
  for (double b : mask.values)
    if (!(b >= 0.0 && b <= 1.0))
      throw Error(ErrorCode::constraint, "mask entries must lie in [0,1]");
}

bool SymmetricKernelSpec::mask_is_binary() const {
  for (double b : mask.values)
    if (b != 0.0 && b != 1.0) return false;
  return true;
}

// Row 0 is the sigma2-orbit of rho; each next row applies sigma1 once.
std::vector<int> orbit_labels(const Permutation& s1, const Permutation& s2, int rho,
                              int l) {
  std::vector<int> labels(static_cast<std::size_t>(l) * l);
  int cur = rho;
  for (int j = 0; j < l; ++j) {
    labels[j] = cur;
    cur = s2(cur);
  }
  for (int i = 1; i < l; ++i)
    for (int j = 0; j < l; ++j) labels[i * l + j] = s1(labels[(i - 1) * l + j]);
  return labels;
}

Kernel materialize_2d(const SymmetricKernelSpec& spec) {
  if (spec.feats() != 1)
    throw Error(ErrorCode::constraint, "materialize_2d requires a scalar seed");
  return materialize(spec);
}

Kernel materialize_3d(const SymmetricKernelSpec& spec) { return materialize(spec); }

Kernel materialize(const SymmetricKernelSpec& spec) {
  spec.validate();
  const int l = spec.side();
  Kernel out(l, spec.feats());
  for (int k = 0; k < spec.feats(); ++k) {
    const std::vector<int> labels =
        orbit_labels(spec.sigma1, spec.sigma2, spec.rho[k], l);
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < l; ++j)
        out.at(i, j, k) = spec.mask.at(i, j, k) * spec.f(labels[i * l + j]);
  }
  return out;
}

Mat pattern_matrix(const Permutation& sigma1, const Permutation& sigma2, int rho,
                   const StrengthFunction& f, int l) {
  if (!commutes(sigma1, sigma2))
    throw Error(ErrorCode::constraint, "sigma1 and sigma2 must commute");
  if (rho < 1 || rho > 4) throw Error(ErrorCode::constraint, "rho must be in {1,2,3,4}");
  const std::vector<int> labels = orbit_labels(sigma1, sigma2, rho, l);
  Mat out(l, l);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j) out(i, j) = f(labels[i * l + j]);
  return out;
}

std::optional<SymmetricKernelSpec> is_symmetric_kernel(const Kernel& k) {
  if (!k.is_2d())
    throw Error(ErrorCode::constraint, "membership search expects a 2-D kernel");
  const int l = k.side;

  // A witnessing spec has an integer strength table, so every nonzero entry
  // must be an integer in [-255,255].
  for (double v : k.values)
    if (v != 0.0 && (v != std::floor(v) || v < -255.0 || v > 255.0)) return std::nullopt;

  Kernel indicator(l, 1);
  for (std::size_t p = 0; p < k.values.size(); ++p)
    indicator.values[p] = k.values[p] != 0.0 ? 1.0 : 0.0;

  for (const auto& [s1, s2] : enumerate_commuting_pairs()) {
    for (int rho = 1; rho <= 4; ++rho) {
      const std::vector<int> labels = orbit_labels(s1, s2, rho, l);
      // Read f off the nonzero entries; bail out on the first conflict.
      std::array<double, 4> required{};
      std::array<bool, 4> assigned{};
      bool ok = true;
      for (int i = 0; i < l && ok; ++i) {
        for (int j = 0; j < l; ++j) {
          const double v = k.at(i, j);
          if (v == 0.0) continue;
          const int lab = labels[i * l + j];
          if (!assigned[lab - 1]) {
            assigned[lab - 1] = true;
            required[lab - 1] = v;
          } else if (required[lab - 1] != v) {
            ok = false;
            break;
          }
        }
      }
      if (!ok) continue;
      StrengthFunction f;
      for (int lab = 0; lab < 4; ++lab)
        f.table[lab] = assigned[lab] ? static_cast<int>(required[lab]) : 1;
      SymmetricKernelSpec spec{f, {rho}, s1, s2, indicator};
      if (materialize(spec) == k) return spec;
    }
  }
  return std::nullopt;
}

BigUint count_family(int l, int m, bool ternary) {
  if (l < 1 || m < 1) throw Error(ErrorCode::constraint, "l and m must be >= 1");
  // 120 * |f| * 4^m * 2^(m l^2); the power-of-two factors become one shift.
  BigUint count(120);
  if (ternary) {
    count.mul_u64(16);
  } else {
    // f : {1,2,3,4} -> {-255,...,255}, 511 choices per entry
    count.mul_u64(511ULL * 511ULL * 511ULL * 511ULL);
  }
  count.shl(static_cast<unsigned>(m) * (static_cast<unsigned>(l) * l + 2));
  return count;
}

long long count_distinct_kernels(int l, bool ternary) {
  if (!ternary)
    throw Error(ErrorCode::constraint, "exhaustive count supported for ternary f only");
  if (l < 1 || l > 2)
    throw Error(ErrorCode::constraint, "exhaustive count supported for l <= 2 only");
  std::set<std::vector<double>> seen;
  const int cells = l * l;
  for (const auto& [s1, s2] : enumerate_commuting_pairs()) {
    for (int rho = 1; rho <= 4; ++rho) {
      for (const StrengthFunction& f : ternary_tables()) {
        for (int bits = 0; bits < (1 << cells); ++bits) {
          SymmetricKernelSpec spec{f, {rho}, s1, s2, Kernel(l, 1)};
          for (int p = 0; p < cells; ++p)
            spec.mask.values[p] = (bits >> p) & 1 ? 1.0 : 0.0;
          seen.insert(materialize(spec).values);
        }
      }
    }
  }
  return static_cast<long long>(seen.size());
}

}  // namespace symkernel
