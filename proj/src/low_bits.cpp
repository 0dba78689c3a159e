#include "copycat/low_bits.hpp"

#include <algorithm>
#include <limits>

#include "copycat/error.hpp"

namespace copycat {

PartialInt PartialInt::exact(const BigInt& value) {
  PartialInt p;
  p.value_ = value;
  p.exact_ = true;
  return p;
}

PartialInt PartialInt::low(const BigInt& value, std::size_t bits) {
  PartialInt p;
  p.value_ = low_bits(value, bits);
  p.bits_ = bits;
  p.exact_ = false;
  return p;
}

std::size_t PartialInt::precision() const {
  return exact_ ? std::numeric_limits<std::size_t>::max() : bits_;
}

std::optional<int> PartialInt::parity() const {
  if (!exact_ && bits_ == 0) return std::nullopt;
  return is_odd(value_) ? 1 : 0;
}

bool PartialInt::consistent_with(const BigInt& target) const {
  if (exact_) return value_ == target;
  return low_bits(target, bits_) == value_;
}

PartialInt PartialInt::operator+(const PartialInt& o) const {
  if (exact_ && o.exact_) return exact(value_ + o.value_);
  return low(value_ + o.value_, std::min(precision(), o.precision()));
}

PartialInt PartialInt::operator-(const PartialInt& o) const {
  if (exact_ && o.exact_) return exact(value_ - o.value_);
  return low(value_ - o.value_, std::min(precision(), o.precision()));
}

PartialInt PartialInt::operator-() const {
  if (exact_) return exact(-value_);
  return low(-value_, bits_);
}

PartialInt PartialInt::halved() const {
  if (exact_) {
    if (is_odd(value_)) throw ParameterError("halving an odd exact value");
    BigInt h;
    mpz_divexact_ui(h.get_mpz_t(), value_.get_mpz_t(), 2);
    return exact(h);
  }
  if (bits_ == 0) return *this;
  return low(value_ >> 1, bits_ - 1);
}

}  // namespace copycat
