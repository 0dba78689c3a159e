#include <doctest.h>

#include <numeric>
#include <optional>

#include "copycat/error.hpp"
#include "copycat/schemes.hpp"

using namespace copycat;

namespace {

// School-book modular exponentiation by repeated multiplication.
long naive_pow(long base, long exp, long m) {
  long r = 1 % m;
  for (long i = 0; i < exp; ++i) r = r * base % m;
  return r;
}

long square_multiply(long base, long exp, long m) {
  long r = 1 % m;
  base %= m;
  for (; exp > 0; exp >>= 1) {
    if (exp & 1) r = r * base % m;
    base = base * base % m;
  }
  return r;
}

long naive_inverse(long a, long m) {
  for (long x = 1; x < m; ++x) {
    if (a * x % m == 1) return x;
  }
  return 0;
}

// Affine point arithmetic, written independently of the library's Jacobian
// code: None is the point at infinity.
struct Affine {
  BigInt x, y;
};
using Pt = std::optional<Affine>;

Pt affine_add(const Curve& c, const Pt& p1, const Pt& p2) {
  if (!p1) return p2;
  if (!p2) return p1;
  BigInt lambda;
  if (p1->x == p2->x) {
    if (mod(p1->y + p2->y, c.p) == 0) return std::nullopt;
    lambda = mod((3 * p1->x * p1->x + c.a) * modinv_ref(mod(2 * p1->y, c.p), c.p), c.p);
  } else {
    lambda = mod((p2->y - p1->y) * modinv_ref(mod(p2->x - p1->x, c.p), c.p), c.p);
  }
  const BigInt x3 = mod(lambda * lambda - p1->x - p2->x, c.p);
  const BigInt y3 = mod(lambda * (p1->x - x3) - p1->y, c.p);
  return Affine{x3, y3};
}

Pt double_and_add(const Curve& c, BigInt k, Pt p) {
  Pt acc;
  while (k > 0) {
    if (is_odd(k)) acc = affine_add(c, acc, p);
    p = affine_add(c, p, p);
    k >>= 1;
  }
  return acc;
}

bool independent_ecdsa_verify(const Curve& c, const Affine& q, const SignatureSample& sig) {
  const BigInt w = modinv_ref(sig.s, c.n);
  const Pt g = Affine{c.g.x, c.g.y};
  const Pt sum = affine_add(c, double_and_add(c, mod(sig.h * w, c.n), g), double_and_add(c, mod(sig.r * w, c.n), q));
  return sum && mod(sum->x, c.n) == sig.r;
}

// Smallest curve y^2 = x^3 + x + b over F_p (p < 2^16) with a prime number
// of points, found by counting every point.
Curve counted_tiny_curve() {
  const long p = 65521;
  for (long b = 1;; ++b) {
    long count = 1;  // infinity
    for (long x = 0; x < p; ++x) {
      const long rhs = ((x * x % p * x + x + b) % p + p) % p;
      if (rhs == 0) {
        count += 1;
      } else if (square_multiply(rhs, (p - 1) / 2, p) == 1) {
        count += 2;
      }
    }
    if (!is_probable_prime(count)) continue;
    for (long x = 0; x < p; ++x) {
      const long rhs = ((x * x % p * x + x + b) % p + p) % p;
      for (long y = 1; y < p; ++y) {
        if (y * y % p == rhs) return Curve{"tiny", p, 1, b, EcPoint{x, y, false}, count};
      }
    }
  }
}

}  // namespace

TEST_CASE("modinv_ref against brute force") {
  CHECK(modinv_ref(3, 7) == naive_inverse(3, 7));
  CHECK(modinv_ref(3, 7) == 5);
  CHECK(modinv_ref(1, 99) == 1);
  CHECK_THROWS_AS(modinv_ref(4, 8), NoInverseError);
  CHECK_THROWS_AS(modinv_ref(3, 1), ParameterError);
  for (long m = 2; m < 60; ++m) {
    for (long a = 1; a < m; ++a) {
      if (std::gcd(a, m) == 1) CHECK(modinv_ref(a, m) == naive_inverse(a, m));
    }
  }
}

TEST_CASE("RSA key from small primes") {
  // lambda = lcm(10, 12) = 60; d by exhaustive search over 1..59.
  long d = 0;
  for (long c = 1; c < 60; ++c) {
    if (7 * c % 60 == 1) d = c;
  }
  const RsaKey key = rsa_key_from_primes(13, 11, 7);
  CHECK(key.n == 143);
  CHECK(key.lambda == 60);
  CHECK(key.d == d);
  CHECK(key.d == 43);
  CHECK(rsa_key_valid(key));
  CHECK_THROWS_AS(rsa_key_from_primes(13, 11, 8), ParameterError);
  CHECK_THROWS_AS(rsa_key_from_primes(13, 11, 5), ParameterError);  // gcd(5, 60) = 5
}

TEST_CASE("RSA key generation") {
  CHECK_THROWS_AS(rsa_keygen(128, 4, 1), ParameterError);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const RsaKey key = rsa_keygen(128, 65537, seed);
    CHECK(rsa_key_valid(key));
    CHECK(bit_length(key.n) == 128);
    CHECK(key.p > key.q);
    CHECK(mod(key.q_inv * key.q, key.p) == 1);
    CHECK(mod(key.e * key.d, key.lambda) == 1);
    CHECK(gcd(key.e, key.p - 1) == 1);
    CHECK(gcd(key.e, key.q - 1) == 1);
  }
  const RsaKey a = rsa_keygen(96, 3, 5), b = rsa_keygen(96, 3, 5);
  CHECK(a.p == b.p);
  CHECK(a.q == b.q);
}

TEST_CASE("DSA tiny group by direct evaluation") {
  const long p = 23, n = 11, g = 4, x = 7, h = 5, k = 9;
  const long y = naive_pow(g, x, p);
  const long r = naive_pow(g, k, p) % n;
  const long s = naive_inverse(k, n) * ((h + x * r) % n) % n;
  const DsaKey key = dsa_key_from_secret(DsaParams{p, n, g}, x);
  CHECK(key.y == y);
  const SignatureSample sig = dsa_sign(key, h, BigInt(k), 1);
  CHECK(sig.r == r);
  CHECK(sig.s == s);
  CHECK(sig.r == 2);
  CHECK(sig.s == 7);
  CHECK(dsa_verify(key, sig));
}

TEST_CASE("DSA signatures satisfy the signing congruence") {
  const DsaParams params = dsa_paramgen(256, 64, 11);
  CHECK(mod(params.p - 1, params.n) == 0);
  CHECK(powm(params.g, params.n, params.p) == 1);
  const DsaKey key = dsa_keygen(params, 12);
  CHECK(key.x > 1);
  CHECK(key.x < params.n - 1);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const SignatureSample sig = dsa_sign(key, BigInt(1000 + i), std::nullopt, i);
    REQUIRE(sig.k);
    CHECK(mod(sig.s * *sig.k - sig.h - sig.r * key.x, params.n) == 0);
    CHECK(dsa_verify(key, sig));
  }
  // k = 1 is outside the usable range and gets replaced.
  const SignatureSample sig = dsa_sign(key, 5, BigInt(1), 3);
  CHECK(*sig.k != 1);
  CHECK(dsa_verify(key, sig));
}

TEST_CASE("ElGamal tiny group by direct evaluation") {
  const long p = 23, g = 5, x = 6, k = 3, h = 10;
  const long y = naive_pow(g, x, p);
  const long r = naive_pow(g, k, p);
  const long s = naive_inverse(k, p - 1) * (((h - x * r) % (p - 1) + (p - 1)) % (p - 1)) % (p - 1);
  const ElGamalKey key = elgamal_key_from_secret(p, g, x);
  CHECK(key.y == y);
  const SignatureSample sig = elgamal_sign(key, h, BigInt(k), 1);
  CHECK(sig.r == r);
  CHECK(sig.s == s);
  CHECK(elgamal_verify(key, sig));
  // gcd(4, 22) = 2: the nonce is replaced by an invertible one.
  const SignatureSample other = elgamal_sign(key, h, BigInt(4), 2);
  CHECK(gcd(*other.k, 22) == 1);
  CHECK(mod(other.s * *other.k + other.r * x - h, 22) == 0);
}

TEST_CASE("ElGamal signatures satisfy the signing congruence") {
  const ElGamalKey key = elgamal_keygen(128, 4);
  for (std::uint64_t i = 0; i < 10; ++i) {
    const SignatureSample sig = elgamal_sign(key, BigInt(77 + i), std::nullopt, i);
    CHECK(mod(sig.s * *sig.k + sig.r * key.x - sig.h, key.p - 1) == 0);
    CHECK(elgamal_verify(key, sig));
  }
}

TEST_CASE("curve presets") {
  for (const char* name : {"toy", "p256", "brainpoolP160r1"}) {
    const Curve c = curve_by_name(name);
    CHECK(on_curve(c, c.g));
    CHECK(is_probable_prime(c.n));
    CHECK(ec_mul(c, c.n, c.g).infinity);
    CHECK(ec_mul(c, c.n - 1, c.g) == ec_negate(c, c.g));
  }
  CHECK(bit_length(curve_by_name("p256").n) == 256);
  CHECK(bit_length(curve_by_name("brainpoolP160r1").n) == 160);
  CHECK(bit_length(curve_by_name("toy").n) < 32);
  CHECK_THROWS_AS(curve_by_name("nope"), ParameterError);
}

TEST_CASE("EC arithmetic matches an affine double-and-add") {
  const Curve c = toy_curve();
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const BigInt k = rng.range(1, c.n - 1);
    const EcPoint lib = ec_mul(c, k, c.g);
    const Pt ref = double_and_add(c, k, Affine{c.g.x, c.g.y});
    REQUIRE(ref);
    CHECK(lib.x == ref->x);
    CHECK(lib.y == ref->y);
    CHECK(on_curve(c, lib));
  }
  const EcPoint a = ec_mul(c, 5, c.g), b = ec_mul(c, 7, c.g);
  CHECK(ec_add(c, a, b) == ec_mul(c, 12, c.g));
  CHECK(ec_double(c, a) == ec_mul(c, 10, c.g));
  CHECK(ec_add(c, a, ec_negate(c, a)).infinity);
}

TEST_CASE("ECDSA on a counted tiny curve verifies independently") {
  const Curve c = counted_tiny_curve();
  CHECK(c.n < 65536 + 2 * 256 + 1);
  CHECK(on_curve(c, c.g));
  CHECK(ec_mul(c, c.n, c.g).infinity);
  const EcdsaKey key = ecdsa_keygen(c, 21);
  for (std::uint64_t i = 0; i < 30; ++i) {
    const SignatureSample sig = ecdsa_sign(key, BigInt(i * 97 % c.n), std::nullopt, i);
    CHECK(ecdsa_verify(key, sig));
    CHECK(independent_ecdsa_verify(c, Affine{key.q.x, key.q.y}, sig));
    CHECK(mod(sig.s * *sig.k - sig.h - sig.r * key.d, c.n) == 0);
  }
}

TEST_CASE("ECDSA on standard curves") {
  for (const char* name : {"p256", "brainpoolP160r1"}) {
    const EcdsaKey key = ecdsa_keygen(curve_by_name(name), 5);
    CHECK(key.q == ec_mul(key.curve, key.d, key.curve.g));
    const SignatureSample sig = ecdsa_sign(key, 123456789, std::nullopt, 8);
    CHECK(ecdsa_verify(key, sig));
    CHECK(independent_ecdsa_verify(key.curve, Affine{key.q.x, key.q.y}, sig));
    SignatureSample bad = sig;
    bad.h += 1;
    CHECK_FALSE(ecdsa_verify(key, bad));
  }
}

TEST_CASE("blinded ECDSA produces ordinary signatures") {
  const EcdsaKey key = ecdsa_keygen(toy_curve(), 2);
  const SignatureSample sig = ecdsa_sign_blinded(key, 1234, 5555, 777);
  CHECK(ecdsa_verify(key, sig));
  CHECK(*sig.k == 5555);
  CHECK(*sig.blinding == 777);
}

TEST_CASE("leading zero bits use the order width") {
  const BigInt n = pow2(8) - 5;  // 8-bit order
  CHECK(leading_zero_bits(0b00010110, n) == 3);
  CHECK(leading_zero_bits(1, n) == 7);
  CHECK(leading_zero_bits(0b10000000, n) == 0);
}

TEST_CASE("key generation is deterministic under the seed") {
  CHECK(ecdsa_keygen(toy_curve(), 3).d == ecdsa_keygen(toy_curve(), 3).d);
  CHECK(elgamal_keygen(64, 3).x == elgamal_keygen(64, 3).x);
  const DsaParams a = dsa_paramgen(128, 32, 8), b = dsa_paramgen(128, 32, 8);
  CHECK(a.p == b.p);
  CHECK(a.g == b.g);
}
