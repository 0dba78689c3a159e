#pragma once

// Integers known either exactly or only modulo a power of two. Used to replay
// a victim when its inputs are only partially guessed.

#include <cstddef>
#include <optional>

#include "copycat/bigint.hpp"

namespace copycat {

class PartialInt {
 public:
  PartialInt() = default;
  static PartialInt exact(const BigInt& value);
  // value mod 2^bits.
  static PartialInt low(const BigInt& value, std::size_t bits);

  bool is_exact() const { return exact_; }
  // Known bits; unbounded for exact values.
  std::size_t precision() const;
  // Exact value, or the residue in [0, 2^precision).
  const BigInt& value() const { return value_; }

  // nullopt once no bits are left.
  std::optional<int> parity() const;
  // Whether the value could be `target`, given the bits that are known.
  bool consistent_with(const BigInt& target) const;

  PartialInt operator+(const PartialInt& o) const;
  PartialInt operator-(const PartialInt& o) const;
  PartialInt operator-() const;
  // Division by two of a value whose parity was checked to be even; costs
  // one bit of precision.
  PartialInt halved() const;

 private:
  BigInt value_;
  std::size_t bits_ = 0;
  bool exact_ = true;
};

}  // namespace copycat
