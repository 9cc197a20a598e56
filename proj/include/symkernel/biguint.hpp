#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace symkernel {

// Minimal unsigned big integer: just enough for the kernel-family counts,
// which are (small constant) * 2^k with k possibly in the thousands.
class BigUint {
 public:
  BigUint() : limbs_{0} {}
  explicit BigUint(std::uint64_t v);

  BigUint& mul_u64(std::uint64_t v);
  BigUint& shl(unsigned bits);

  std::string to_string() const;  // decimal
  double to_double() const;       // magnitude checks only

  bool operator==(const BigUint& o) const { return limbs_ == o.limbs_; }
  bool operator<(const BigUint& o) const;

 private:
  void trim();
  std::vector<std::uint32_t> limbs_;  // little-endian, base 2^32
};

}  // namespace symkernel
