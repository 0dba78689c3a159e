#include "copycat/bigint.hpp"

#include <algorithm>
#include <stdexcept>

#include "copycat/error.hpp"

namespace copycat {
namespace {

constexpr unsigned kSmallPrimes[] = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,  53,  59,
    61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107, 109, 113, 127, 131, 137, 139,
    149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233,
    239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311, 313, 317, 331, 337,
    347, 349, 353, 359, 367, 373, 379, 383, 389, 397, 401, 409, 419, 421, 431, 433, 439,
    443, 449, 457, 461, 463, 467, 479, 487, 491, 499, 503, 509, 521, 523, 541, 547, 557,
    563, 569, 571, 577, 587, 593, 599, 601, 607, 613, 617, 619, 631, 641, 643, 647, 653,
    659, 661, 673, 677, 683, 691, 701, 709, 719, 727, 733, 739, 743, 751, 757, 761, 769,
    773, 787, 797, 809, 811, 821, 823, 827, 829, 839, 853, 857, 859, 863, 877, 881, 883,
    887, 907, 911, 919, 929, 937, 941, 947, 953, 967, 971, 977, 983, 991};

}  // namespace

std::size_t bit_length(const BigInt& x) {
  if (x == 0) return 0;
  return mpz_sizeinbase(x.get_mpz_t(), 2);
}

bool is_odd(const BigInt& x) { return mpz_odd_p(x.get_mpz_t()) != 0; }

BigInt mod(const BigInt& x, const BigInt& m) {
  BigInt r;
  mpz_mod(r.get_mpz_t(), x.get_mpz_t(), m.get_mpz_t());
  return r;
}

BigInt low_bits(const BigInt& x, std::size_t bits) {
  BigInt r;
  mpz_fdiv_r_2exp(r.get_mpz_t(), x.get_mpz_t(), bits);
  return r;
}

BigInt pow2(std::size_t bits) {
  BigInt r;
  mpz_setbit(r.get_mpz_t(), bits);
  return r;
}

BigInt powm(const BigInt& base, const BigInt& exp, const BigInt& m) {
  BigInt r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), m.get_mpz_t());
  return r;
}

BigInt gcd(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

BigInt lcm(const BigInt& a, const BigInt& b) {
  BigInt r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

std::size_t trailing_zeros(const BigInt& x) {
  if (x == 0) throw ParameterError("trailing_zeros of zero");
  return mpz_scan1(x.get_mpz_t(), 0);
}

std::string to_decimal(const BigInt& x) { return x.get_str(10); }

BigInt from_decimal(const std::string& text) {
  std::size_t start = (!text.empty() && text[0] == '-') ? 1 : 0;
  if (text.size() == start) throw std::invalid_argument("empty integer");
  for (std::size_t i = start; i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9') throw std::invalid_argument("not a decimal integer: " + text);
  }
  return BigInt(text, 10);
}

BigInt from_hex(const std::string& text) {
  std::string digits = text;
  if (digits.rfind("0x", 0) == 0 || digits.rfind("0X", 0) == 0) digits = digits.substr(2);
  return BigInt(digits, 16);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

BigInt Rng::bits(std::size_t count) {
  BigInt r = 0;
  std::size_t filled = 0;
  while (filled < count) {
    std::uint64_t word = engine_();
    std::size_t take = std::min<std::size_t>(64, count - filled);
    if (take < 64) word &= (std::uint64_t{1} << take) - 1;
    BigInt w;
    mpz_import(w.get_mpz_t(), 1, 1, sizeof(word), 0, 0, &word);
    r += w << filled;
    filled += take;
  }
  return r;
}

BigInt Rng::below(const BigInt& bound) {
  if (bound <= 0) throw ParameterError("Rng::below needs a positive bound");
  const std::size_t n = bit_length(bound);
  for (;;) {
    BigInt candidate = bits(n);
    if (candidate < bound) return candidate;
  }
}

BigInt Rng::range(const BigInt& lo, const BigInt& hi) {
  if (lo > hi) throw ParameterError("Rng::range with lo > hi");
  return lo + below(hi - lo + 1);
}

bool is_probable_prime(const BigInt& n, int rounds) {
  if (n < 2) return false;
  for (unsigned p : kSmallPrimes) {
    if (n == p) return true;
    if (mpz_divisible_ui_p(n.get_mpz_t(), p)) return false;
  }
  const BigInt n_minus_1 = n - 1;
  const std::size_t s = trailing_zeros(n_minus_1);
  const BigInt d = n_minus_1 >> s;

  BigInt digest = low_bits(n, 64);
  Rng bases(splitmix64(digest.get_ui() ^ bit_length(n)));
  for (int round = 0; round < rounds; ++round) {
    const BigInt a = bases.range(2, n - 2);
    BigInt x = powm(a, d, n);
    if (x == 1 || x == n_minus_1) continue;
    bool composite = true;
    for (std::size_t r = 1; r < s; ++r) {
      x = x * x % n;
      if (x == n_minus_1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

BigInt random_prime(std::size_t bits, Rng& rng, const std::function<bool(const BigInt&)>& accept) {
  if (bits < 3) throw ParameterError("random_prime needs at least 3 bits");
  for (;;) {
    BigInt candidate = rng.bits(bits);
    mpz_setbit(candidate.get_mpz_t(), bits - 1);
    mpz_setbit(candidate.get_mpz_t(), bits - 2);
    mpz_setbit(candidate.get_mpz_t(), 0);
    if (!is_probable_prime(candidate)) continue;
    if (accept && !accept(candidate)) continue;
    return candidate;
  }
}

}  // namespace copycat
