#pragma once

#include <array>
#include <vector>

#include "symkernel/permutation.hpp"

namespace symkernel {

/// A 4-entry signed lookup table f : {1,2,3,4} -> [-255,255].
struct StrengthFunction {
  std::array<int, 4> table{};  // table[i] = f(i+1)

  int operator()(int label) const { return table[label - 1]; }

  bool in_range() const {
    for (int v : table)
      if (v < -255 || v > 255) return false;
    return true;
  }

  /// Entries restricted to {-1,1} (the training regime).
  bool is_ternary() const {
    for (int v : table)
      if (v != -1 && v != 1) return false;
    return true;
  }

  bool operator==(const StrengthFunction&) const = default;
  bool operator<(const StrengthFunction& o) const { return table < o.table; }
};

/// f . p : label -> f(p(label))
inline StrengthFunction precompose(const StrengthFunction& f, const Permutation& p) {
  StrengthFunction out;
  for (int x = 1; x <= 4; ++x) out.table[x - 1] = f(p(x));
  return out;
}

/// The 16 {-1,1}-valued tables, lexicographic.
inline const std::vector<StrengthFunction>& ternary_tables() {
  static const std::vector<StrengthFunction> tables = [] {
    std::vector<StrengthFunction> out;
    for (int a : {-1, 1})
      for (int b : {-1, 1})
        for (int c : {-1, 1})
          for (int d : {-1, 1}) out.push_back(StrengthFunction{{a, b, c, d}});
    return out;
  }();
  return tables;
}

}  // namespace symkernel
