#pragma once

// Key generation and signing for the schemes whose secrets the attacks
// target. This is the fixture generator, not a victim: nothing here is
// meant to be constant time.

#include <cstdint>
#include <optional>
#include <string>

#include "copycat/bigint.hpp"

namespace copycat {

struct RsaKey {
  BigInt p;
  BigInt q;
  BigInt n;
  BigInt e;
  BigInt d;
  BigInt lambda;
  BigInt d_p;
  BigInt d_q;
  BigInt q_inv;  // q^-1 mod p
};

// Builds the full key from two distinct primes. Throws ParameterError when e
// is even or not invertible modulo lambda.
RsaKey rsa_key_from_primes(const BigInt& p, const BigInt& q, const BigInt& e);

// `bits` is the modulus size (even, >= 16). Primes are ordered p > q, the
// CRT convention the q^-1 mod p victim relies on.
RsaKey rsa_keygen(std::size_t bits, const BigInt& e, std::uint64_t seed);

// All RsaKey invariants, checked exactly.
bool rsa_key_valid(const RsaKey& key);

struct DsaParams {
  BigInt p;  // prime modulus
  BigInt n;  // prime order, n | p - 1
  BigInt g;  // generator of the order-n subgroup
};

struct DsaKey {
  DsaParams params;
  BigInt x;
  BigInt y;
};

DsaParams dsa_paramgen(std::size_t modulus_bits, std::size_t order_bits, std::uint64_t seed);
DsaKey dsa_keygen(const DsaParams& params, std::uint64_t seed);
DsaKey dsa_key_from_secret(const DsaParams& params, const BigInt& x);

struct EcPoint {
  BigInt x;
  BigInt y;
  bool infinity = false;

  static EcPoint at_infinity() { return EcPoint{0, 0, true}; }
  bool operator==(const EcPoint& other) const;
};

// Short Weierstrass curve y^2 = x^3 + a x + b over F_p with a base point of
// prime order n.
struct Curve {
  std::string name;
  BigInt p;
  BigInt a;
  BigInt b;
  EcPoint g;
  BigInt n;
};

// 27-bit prime-order curve found by exhaustive point counting; small enough
// for fast single-trace fixtures.
Curve toy_curve();
Curve p256_curve();
Curve brainpool_p160r1_curve();
// "toy", "p256" or "brainpoolP160r1"; throws ParameterError otherwise.
Curve curve_by_name(const std::string& name);

bool on_curve(const Curve& curve, const EcPoint& point);
EcPoint ec_negate(const Curve& curve, const EcPoint& point);
EcPoint ec_add(const Curve& curve, const EcPoint& lhs, const EcPoint& rhs);
EcPoint ec_double(const Curve& curve, const EcPoint& point);
// Scalar multiplication in Jacobian coordinates; k may be any integer.
EcPoint ec_mul(const Curve& curve, const BigInt& k, const EcPoint& point);

struct EcdsaKey {
  Curve curve;
  BigInt d;
  EcPoint q;
};

EcdsaKey ecdsa_keygen(const Curve& curve, std::uint64_t seed);
EcdsaKey ecdsa_key_from_secret(const Curve& curve, const BigInt& d);

struct ElGamalKey {
  BigInt p;
  BigInt g;
  BigInt x;
  BigInt y;
};

ElGamalKey elgamal_keygen(std::size_t bits, std::uint64_t seed);
ElGamalKey elgamal_key_from_secret(const BigInt& p, const BigInt& g, const BigInt& x);

struct SignatureSample {
  BigInt r;
  BigInt s;
  BigInt h;                        // already reduced modulo the group order
  std::optional<BigInt> k;         // ground truth only
  std::optional<BigInt> blinding;  // ground truth only, blinded ECDSA
  std::optional<int> z;            // leading zero bits of k, filled by the channel
};

// Signs h with nonce k if it is usable, otherwise (and whenever r or s is 0)
// draws nonces from a stream seeded by `seed`.
SignatureSample dsa_sign(const DsaKey& key, const BigInt& h, std::optional<BigInt> k,
                         std::uint64_t seed);
SignatureSample ecdsa_sign(const EcdsaKey& key, const BigInt& h, std::optional<BigInt> k,
                           std::uint64_t seed);
SignatureSample elgamal_sign(const ElGamalKey& key, const BigInt& h, std::optional<BigInt> k,
                             std::uint64_t seed);

// ECDSA where the signer inverts the masked nonce k*b and separately inverts
// b, then unmasks: s = (k b)^-1 (h + r d) b mod n.
SignatureSample ecdsa_sign_blinded(const EcdsaKey& key, const BigInt& h, const BigInt& k,
                                   const BigInt& b);

bool dsa_verify(const DsaKey& key, const SignatureSample& sig);
bool ecdsa_verify(const EcdsaKey& key, const SignatureSample& sig);
bool elgamal_verify(const ElGamalKey& key, const SignatureSample& sig);

// a^-1 mod m in [1, m-1]; NoInverseError unless gcd(a, m) = 1.
BigInt modinv_ref(const BigInt& a, const BigInt& m);

// Bit length of the order minus the bit length of k.
int leading_zero_bits(const BigInt& k, const BigInt& order);

}  // namespace copycat
