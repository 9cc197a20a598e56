#include "symkernel/biguint.hpp"

#include <algorithm>
#include <cmath>

namespace symkernel {

BigUint::BigUint(std::uint64_t v) {
  limbs_.push_back(static_cast<std::uint32_t>(v));
  limbs_.push_back(static_cast<std::uint32_t>(v >> 32));
  trim();
}

void BigUint::trim() {
  while (limbs_.size() > 1 && limbs_.back() == 0) limbs_.pop_back();
}

BigUint& BigUint::mul_u64(std::uint64_t v) {
  const std::uint32_t parts[2] = {static_cast<std::uint32_t>(v),
                                  static_cast<std::uint32_t>(v >> 32)};
  std::vector<std::uint32_t> out(limbs_.size() + 2, 0);
  for (int p = 0; p < 2; ++p) {
    if (parts[p] == 0) continue;
    std::uint64_t carry = 0;
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
      std::uint64_t cur = static_cast<std::uint64_t>(limbs_[i]) * parts[p] +
                          out[i + p] + carry;
      out[i + p] = static_cast<std::uint32_t>(cur);
      carry = cur >> 32;
    }
    std::size_t pos = limbs_.size() + p;
    while (carry) {
      std::uint64_t cur = out[pos] + carry;
      out[pos] = static_cast<std::uint32_t>(cur);
      carry = cur >> 32;
      ++pos;
    }
  }
  limbs_ = std::move(out);
  trim();
  return *this;
}

BigUint& BigUint::shl(unsigned bits) {
  const unsigned whole = bits / 32;
  const unsigned rem = bits % 32;
  std::vector<std::uint32_t> out(limbs_.size() + whole + 1, 0);
  for (std::size_t i = 0; i < limbs_.size(); ++i) {
    std::uint64_t cur = static_cast<std::uint64_t>(limbs_[i]) << rem;
    out[i + whole] |= static_cast<std::uint32_t>(cur);
    out[i + whole + 1] |= static_cast<std::uint32_t>(cur >> 32);
  }
  limbs_ = std::move(out);
  trim();
  return *this;
}

std::string BigUint::to_string() const {
  std::vector<std::uint32_t> work = limbs_;
  std::string digits;
  auto all_zero = [](const std::vector<std::uint32_t>& w) {
    return std::all_of(w.begin(), w.end(), [](std::uint32_t x) { return x == 0; });
  };
  if (all_zero(work)) return "0";
  while (!all_zero(work)) {
    // divide by 10^9, collect remainder
    std::uint64_t rem = 0;
    for (std::size_t i = work.size(); i-- > 0;) {
      std::uint64_t cur = (rem << 32) | work[i];
      work[i] = static_cast<std::uint32_t>(cur / 1000000000ULL);
      rem = cur % 1000000000ULL;
    }
    for (int d = 0; d < 9; ++d) {
      digits.push_back(static_cast<char>('0' + rem % 10));
      rem /= 10;
    }
  }
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
  std::reverse(digits.begin(), digits.end());
  return digits;
}

double BigUint::to_double() const {
  double acc = 0.0;
  for (std::size_t i = limbs_.size(); i-- > 0;)
    acc = acc * 4294967296.0 + static_cast<double>(limbs_[i]);
  return acc;
}

bool BigUint::operator<(const BigUint& o) const {
  if (limbs_.size() != o.limbs_.size()) return limbs_.size() < o.limbs_.size();
  for (std::size_t i = limbs_.size(); i-- > 0;)
    if (limbs_[i] != o.limbs_[i]) return limbs_[i] < o.limbs_[i];
  return false;
}

}  // namespace symkernel
