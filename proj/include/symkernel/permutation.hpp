#pragma once

#include <array>
#include <utility>
#include <vector>

namespace symkernel {

/// A bijection on {1,2,3,4}, stored as its image array:
/// image()[i] = sigma(i+1). All construction paths validate bijectivity.
class Permutation {
 public:
  Permutation() : image_{1, 2, 3, 4} {}

  static Permutation from_image(const std::array<int, 4>& image);

  int operator()(int x) const { return image_[x - 1]; }
  const std::array<int, 4>& image() const { return image_; }

  bool operator==(const Permutation&) const = default;
  bool operator<(const Permutation& o) const { return image_ < o.image_; }

 private:
  std::array<int, 4> image_;
};

Permutation compose(const Permutation& p, const Permutation& q);  // x -> p(q(x))
Permutation inverse(const Permutation& p);
Permutation power(const Permutation& p, int k);  // k >= 0; power(p,0) = identity
bool commutes(const Permutation& p, const Permutation& q);
int order(const Permutation& p);

/// All 24 elements of S4, lexicographic on image arrays.
const std::vector<Permutation>& all_permutations();

/// Every ordered pair (p,q) with pq = qp, lexicographic on (p,q) images.
/// There are exactly 120 of them.
const std::vector<std::pair<Permutation, Permutation>>& enumerate_commuting_pairs();

}  // namespace symkernel
