#include "symkernel/permutation.hpp"

#include <algorithm>

#include "symkernel/error.hpp"

namespace symkernel {

Permutation Permutation::from_image(const std::array<int, 4>& image) {
  std::array<bool, 4> seen{};
  for (int v : image) {
    if (v < 1 || v > 4)
      throw Error(ErrorCode::constraint, "permutation image entry out of {1,2,3,4}");
    if (seen[v - 1])
      throw Error(ErrorCode::constraint, "permutation image is not a bijection");
    seen[v - 1] = true;
  }
  Permutation p;
  p.image_ = image;
  return p;
}

Permutation compose(const Permutation& p, const Permutation& q) {
  std::array<int, 4> img;
  for (int x = 1; x <= 4; ++x) img[x - 1] = p(q(x));
  return Permutation::from_image(img);
}

Permutation inverse(const Permutation& p) {
  std::array<int, 4> img;
  for (int x = 1; x <= 4; ++x) img[p(x) - 1] = x;
  return Permutation::from_image(img);
}

Permutation power(const Permutation& p, int k) {
  Permutation acc;
  Permutation base = p;
  while (k > 0) {
    if (k & 1) acc = compose(acc, base);
    base = compose(base, base);
    k >>= 1;
  }
  return acc;
}

bool commutes(const Permutation& p, const Permutation& q) {
  return compose(p, q) == compose(q, p);
}

int order(const Permutation& p) {
  Permutation acc = p;
  int n = 1;
  while (!(acc == Permutation{})) {
    acc = compose(acc, p);
    ++n;
  }
  return n;
}

const std::vector<Permutation>& all_permutations() {
  static const std::vector<Permutation> all = [] {
    std::array<int, 4> img{1, 2, 3, 4};
    std::vector<Permutation> out;
    do {
      out.push_back(Permutation::from_image(img));
    } while (std::next_permutation(img.begin(), img.end()));
    return out;
  }();
  return all;
}

const std::vector<std::pair<Permutation, Permutation>>& enumerate_commuting_pairs() {
  static const std::vector<std::pair<Permutation, Permutation>> pairs = [] {
    std::vector<std::pair<Permutation, Permutation>> out;
    for (const Permutation& p : all_permutations())
      for (const Permutation& q : all_permutations())
        if (commutes(p, q)) out.emplace_back(p, q);
    return out;
  }();
  return pairs;
}

}  // namespace symkernel
