#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <random>
#include <string>

namespace copycat {

using BigInt = mpz_class;

// Number of significant bits; bit_length(0) == 0.
std::size_t bit_length(const BigInt& x);

bool is_odd(const BigInt& x);
inline bool is_even(const BigInt& x) { return !is_odd(x); }

// Least non-negative residue of x modulo m (m > 0).
BigInt mod(const BigInt& x, const BigInt& m);

// x mod 2^bits, always non-negative.
BigInt low_bits(const BigInt& x, std::size_t bits);

BigInt pow2(std::size_t bits);
BigInt powm(const BigInt& base, const BigInt& exp, const BigInt& m);
BigInt gcd(const BigInt& a, const BigInt& b);
BigInt lcm(const BigInt& a, const BigInt& b);

// Number of trailing zero bits (x != 0).
std::size_t trailing_zeros(const BigInt& x);

std::string to_decimal(const BigInt& x);
// Throws std::invalid_argument on anything but an optionally signed decimal.
BigInt from_decimal(const std::string& text);
BigInt from_hex(const std::string& text);

std::uint64_t splitmix64(std::uint64_t x);
// Independent stream seed for the index-th child of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Deterministic random source for big integers; mt19937_64 output is fixed by
// the standard, so identical seeds give identical values on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 2^bits).
  BigInt bits(std::size_t count);
  // Uniform in [0, bound), bound > 0.
  BigInt below(const BigInt& bound);
  // Uniform in [lo, hi], lo <= hi.
  BigInt range(const BigInt& lo, const BigInt& hi);

 private:
  std::mt19937_64 engine_;
};

// Trial division by small primes followed by `rounds` Miller-Rabin rounds with
// bases drawn from a stream seeded by the candidate itself.
bool is_probable_prime(const BigInt& n, int rounds = 40);

// Random prime with exactly `bits` bits whose top two bits are set, so the
// product of two such primes has exactly 2*bits bits. `accept` filters
// candidates (e.g. gcd(e, p-1) == 1).
BigInt random_prime(std::size_t bits, Rng& rng,
                    const std::function<bool(const BigInt&)>& accept = nullptr);

}  // namespace copycat
