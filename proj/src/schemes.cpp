#include "copycat/schemes.hpp"

#include "copycat/error.hpp"

namespace copycat {
namespace {

struct Jacobian {
  BigInt x;
  BigInt y;
  BigInt z;  // z == 0 marks the point at infinity
};

Jacobian to_jacobian(const EcPoint& p) {
  if (p.infinity) return {1, 1, 0};
  return {p.x, p.y, 1};
}

EcPoint to_affine(const Curve& c, const Jacobian& p) {
  if (p.z == 0) return EcPoint::at_infinity();
  const BigInt zi = modinv_ref(p.z, c.p);
  const BigInt zi2 = zi * zi % c.p;
  return {mod(p.x * zi2, c.p), mod(p.y * zi2 * zi, c.p), false};
}

Jacobian jac_double(const Curve& c, const Jacobian& p) {
  if (p.z == 0 || p.y == 0) return {1, 1, 0};
  const BigInt& m = c.p;
  const BigInt y2 = p.y * p.y % m;
  const BigInt s = 4 * p.x * y2 % m;
  const BigInt z2 = p.z * p.z % m;
  const BigInt mm = (3 * p.x * p.x + c.a * (z2 * z2 % m)) % m;
  const BigInt x3 = mod(mm * mm - 2 * s, m);
  const BigInt y3 = mod(mm * (s - x3) - 8 * (y2 * y2 % m), m);
  const BigInt z3 = 2 * p.y * p.z % m;
  return {x3, y3, z3};
}

Jacobian jac_add(const Curve& c, const Jacobian& a, const Jacobian& b) {
  if (a.z == 0) return b;
  if (b.z == 0) return a;
  const BigInt& m = c.p;
  const BigInt z1s = a.z * a.z % m;
  const BigInt z2s = b.z * b.z % m;
  const BigInt u1 = a.x * z2s % m;
  const BigInt u2 = b.x * z1s % m;
  const BigInt s1 = a.y * z2s % m * b.z % m;
  const BigInt s2 = b.y * z1s % m * a.z % m;
  if (u1 == u2) {
    if (s1 != s2) return {1, 1, 0};
    return jac_double(c, a);
  }
  const BigInt h = mod(u2 - u1, m);
  const BigInt r = mod(s2 - s1, m);
  const BigInt h2 = h * h % m;
  const BigInt h3 = h2 * h % m;
  const BigInt u1h2 = u1 * h2 % m;
  const BigInt x3 = mod(r * r - h3 - 2 * u1h2, m);
  const BigInt y3 = mod(r * (u1h2 - x3) - s1 * h3, m);
  const BigInt z3 = h * a.z % m * b.z % m;
  return {x3, y3, z3};
}

// Nonce candidates: the caller's k first, then a deterministic stream.
class NonceSource {
 public:
  NonceSource(std::optional<BigInt> fixed, std::uint64_t seed) : fixed_(std::move(fixed)), rng_(seed) {}

  // Uniform in [2, bound - 2] once the fixed nonce is used up or rejected.
  BigInt next(const BigInt& bound) {
    if (fixed_) {
      BigInt k = *fixed_;
      fixed_.reset();
      if (k > 1 && k < bound - 1) return k;
    }
    return rng_.range(2, bound - 2);
  }

 private:
  std::optional<BigInt> fixed_;
  Rng rng_;
};

}  // namespace

BigInt modinv_ref(const BigInt& a, const BigInt& m) {
  if (m < 2) throw ParameterError("modinv_ref needs m >= 2");
  BigInt r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t()) == 0) {
    throw NoInverseError("no inverse of " + to_decimal(a) + " mod " + to_decimal(m));
  }
  return mod(r, m);
}

int leading_zero_bits(const BigInt& k, const BigInt& order) {
  return static_cast<int>(bit_length(order)) - static_cast<int>(bit_length(k));
}

RsaKey rsa_key_from_primes(const BigInt& p, const BigInt& q, const BigInt& e) {
  if (p == q || p < 2 || q < 2) throw ParameterError("RSA primes must be distinct and >= 2");
  if (is_even(e) || e < 3) throw ParameterError("RSA exponent must be odd and >= 3");
  RsaKey key;
  key.p = p;
  key.q = q;
  key.n = p * q;
  key.e = e;
  key.lambda = lcm(p - 1, q - 1);
  if (gcd(e, key.lambda) != 1) throw ParameterError("e is not invertible modulo lambda");
  key.d = modinv_ref(e, key.lambda);
  key.d_p = mod(key.d, p - 1);
  key.d_q = mod(key.d, q - 1);
  key.q_inv = modinv_ref(q, p);
  return key;
}

RsaKey rsa_keygen(std::size_t bits, const BigInt& e, std::uint64_t seed) {
  if (bits < 16 || bits % 2 != 0) throw ParameterError("RSA modulus bits must be even and >= 16");
  if (is_even(e) || e < 3) throw ParameterError("RSA exponent must be odd and >= 3");
  Rng rng(seed);
  auto coprime = [&e](const BigInt& prime) { return gcd(e, prime - 1) == 1; };
  for (;;) {
    BigInt p = random_prime(bits / 2, rng, coprime);
    BigInt q = random_prime(bits / 2, rng, coprime);
    if (p == q) continue;
    if (p < q) std::swap(p, q);
    // e < lambda keeps d well defined as a proper residue at tiny sizes.
    if (e >= lcm(p - 1, q - 1)) continue;
    return rsa_key_from_primes(p, q, e);
  }
}

bool rsa_key_valid(const RsaKey& key) {
  if (!is_probable_prime(key.p) || !is_probable_prime(key.q) || key.p == key.q) return false;
  if (key.n != key.p * key.q) return false;
  if (key.lambda != lcm(key.p - 1, key.q - 1)) return false;
  if (gcd(key.e, key.lambda) != 1) return false;
  if (mod(key.e * key.d, key.lambda) != 1) return false;
  if (key.d_p != mod(key.d, key.p - 1) || key.d_q != mod(key.d, key.q - 1)) return false;
  return mod(key.q_inv * key.q, key.p) == 1;
}

DsaParams dsa_paramgen(std::size_t modulus_bits, std::size_t order_bits, std::uint64_t seed) {
  if (order_bits < 3 || modulus_bits <= order_bits) {
    throw ParameterError("DSA needs 3 <= order bits < modulus bits");
  }
  Rng rng(seed);
  const BigInt lo = pow2(modulus_bits - 1);
  const BigInt hi = pow2(modulus_bits) - 1;
  for (;;) {
    BigInt n;
    do {
      n = rng.bits(order_bits);
      mpz_setbit(n.get_mpz_t(), order_bits - 1);
    } while (!is_probable_prime(n));
    // p = m n + 1 in [lo, hi] with m even.
    const BigInt m_lo = (lo - 1 + n - 1) / n;
    const BigInt m_hi = (hi - 1) / n;
    if (m_lo > m_hi) continue;
    for (int attempt = 0; attempt < 4096; ++attempt) {
      BigInt m = rng.range(m_lo, m_hi);
      if (is_odd(m)) continue;
      const BigInt p = m * n + 1;
      if (!is_probable_prime(p)) continue;
      for (;;) {
        const BigInt h = rng.range(2, p - 2);
        const BigInt g = powm(h, m, p);
        if (g != 1) return {p, n, g};
      }
    }
  }
}

DsaKey dsa_key_from_secret(const DsaParams& params, const BigInt& x) {
  if (x <= 1 || x >= params.n - 1) throw ParameterError("DSA secret outside (1, n-1)");
  return {params, x, powm(params.g, x, params.p)};
}

DsaKey dsa_keygen(const DsaParams& params, std::uint64_t seed) {
  Rng rng(seed);
  return dsa_key_from_secret(params, rng.range(2, params.n - 2));
}

SignatureSample dsa_sign(const DsaKey& key, const BigInt& h, std::optional<BigInt> k,
                         std::uint64_t seed) {
  const DsaParams& gp = key.params;
  NonceSource nonces(std::move(k), seed);
  const BigInt hn = mod(h, gp.n);
  for (;;) {
    const BigInt nonce = nonces.next(gp.n);
    const BigInt r = mod(powm(gp.g, nonce, gp.p), gp.n);
    if (r == 0) continue;
    const BigInt s = mod(modinv_ref(nonce, gp.n) * (hn + r * key.x), gp.n);
    if (s == 0) continue;
    return {r, s, hn, nonce, std::nullopt, std::nullopt};
  }
}

bool dsa_verify(const DsaKey& key, const SignatureSample& sig) {
  const DsaParams& gp = key.params;
  if (sig.r <= 0 || sig.r >= gp.n || sig.s <= 0 || sig.s >= gp.n) return false;
  const BigInt w = modinv_ref(sig.s, gp.n);
  const BigInt u1 = mod(sig.h * w, gp.n);
  const BigInt u2 = mod(sig.r * w, gp.n);
  const BigInt v = mod(powm(gp.g, u1, gp.p) * powm(key.y, u2, gp.p), gp.p);
  return mod(v, gp.n) == sig.r;
}

bool EcPoint::operator==(const EcPoint& other) const {
  if (infinity || other.infinity) return infinity == other.infinity;
  return x == other.x && y == other.y;
}

Curve toy_curve() {
  return {"toy", BigInt(134205371), BigInt(20246634), BigInt(52992313),
          EcPoint{BigInt(1), BigInt(8916976), false}, BigInt(134208541)};
}

Curve p256_curve() {
  const BigInt p = from_hex("FFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF");
  return {"p256",
          p,
          p - 3,
          from_hex("5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B"),
          EcPoint{from_hex("6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296"),
                  from_hex("4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5"),
                  false},
          from_hex("FFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551")};
}

Curve brainpool_p160r1_curve() {
  return {"brainpoolP160r1",
          from_hex("E95E4A5F737059DC60DFC7AD95B3D8139515620F"),
          from_hex("340E7BE2A280EB74E2BE61BADA745D97E8F7C300"),
          from_hex("1E589A8595423412134FAA2DBDEC95C8D8675E58"),
          EcPoint{from_hex("BED5AF16EA3F6A4F62938C4631EB5AF7BDBCDBC3"),
                  from_hex("1667CB477A1A8EC338F94741669C976316DA6321"), false},
          from_hex("E95E4A5F737059DC60DF5991D45029409E60FC09")};
}

Curve curve_by_name(const std::string& name) {
  if (name == "toy") return toy_curve();
  if (name == "p256") return p256_curve();
  if (name == "brainpoolP160r1") return brainpool_p160r1_curve();
  throw ParameterError("unknown curve: " + name);
}

bool on_curve(const Curve& c, const EcPoint& pt) {
  if (pt.infinity) return true;
  if (pt.x < 0 || pt.x >= c.p || pt.y < 0 || pt.y >= c.p) return false;
  return mod(pt.y * pt.y - (pt.x * pt.x * pt.x + c.a * pt.x + c.b), c.p) == 0;
}

EcPoint ec_negate(const Curve& c, const EcPoint& pt) {
  if (pt.infinity) return pt;
  return {pt.x, mod(-pt.y, c.p), false};
}

EcPoint ec_add(const Curve& c, const EcPoint& lhs, const EcPoint& rhs) {
  return to_affine(c, jac_add(c, to_jacobian(lhs), to_jacobian(rhs)));
}

EcPoint ec_double(const Curve& c, const EcPoint& pt) {
  return to_affine(c, jac_double(c, to_jacobian(pt)));
}

EcPoint ec_mul(const Curve& c, const BigInt& k, const EcPoint& pt) {
  if (k < 0) return ec_mul(c, -k, ec_negate(c, pt));
  Jacobian acc{1, 1, 0};
  const Jacobian base = to_jacobian(pt);
  for (std::size_t i = bit_length(k); i-- > 0;) {
    acc = jac_double(c, acc);
    if (mpz_tstbit(k.get_mpz_t(), i)) acc = jac_add(c, acc, base);
  }
  return to_affine(c, acc);
}

EcdsaKey ecdsa_key_from_secret(const Curve& curve, const BigInt& d) {
  if (d <= 1 || d >= curve.n - 1) throw ParameterError("ECDSA secret outside (1, n-1)");
  return {curve, d, ec_mul(curve, d, curve.g)};
}

EcdsaKey ecdsa_keygen(const Curve& curve, std::uint64_t seed) {
  Rng rng(seed);
  return ecdsa_key_from_secret(curve, rng.range(2, curve.n - 2));
}

SignatureSample ecdsa_sign(const EcdsaKey& key, const BigInt& h, std::optional<BigInt> k,
                           std::uint64_t seed) {
  const Curve& c = key.curve;
  NonceSource nonces(std::move(k), seed);
  const BigInt hn = mod(h, c.n);
  for (;;) {
    const BigInt nonce = nonces.next(c.n);
    const EcPoint kg = ec_mul(c, nonce, c.g);
    if (kg.infinity) continue;
    const BigInt r = mod(kg.x, c.n);
    if (r == 0) continue;
    const BigInt s = mod(modinv_ref(nonce, c.n) * (hn + r * key.d), c.n);
    if (s == 0) continue;
    return {r, s, hn, nonce, std::nullopt, std::nullopt};
  }
}

SignatureSample ecdsa_sign_blinded(const EcdsaKey& key, const BigInt& h, const BigInt& k,
                                   const BigInt& b) {
  const Curve& c = key.curve;
  const BigInt hn = mod(h, c.n);
  const EcPoint kg = ec_mul(c, k, c.g);
  if (kg.infinity || mod(kg.x, c.n) == 0) throw ParameterError("nonce gives r = 0");
  const BigInt r = mod(kg.x, c.n);
  const BigInt kb_inv = modinv_ref(mod(k * b, c.n), c.n);
  const BigInt s = mod(kb_inv * mod((hn + r * key.d) * b, c.n), c.n);
  if (s == 0) throw ParameterError("nonce gives s = 0");
  return {r, s, hn, k, b, std::nullopt};
}

bool ecdsa_verify(const EcdsaKey& key, const SignatureSample& sig) {
  const Curve& c = key.curve;
  if (sig.r <= 0 || sig.r >= c.n || sig.s <= 0 || sig.s >= c.n) return false;
  const BigInt w = modinv_ref(sig.s, c.n);
  const EcPoint pt = ec_add(c, ec_mul(c, mod(sig.h * w, c.n), c.g),
                            ec_mul(c, mod(sig.r * w, c.n), key.q));
  return !pt.infinity && mod(pt.x, c.n) == sig.r;
}

ElGamalKey elgamal_key_from_secret(const BigInt& p, const BigInt& g, const BigInt& x) {
  if (x < 1 || x > p - 2) throw ParameterError("ElGamal secret outside [1, p-2]");
  return {p, g, x, powm(g, x, p)};
}

ElGamalKey elgamal_keygen(std::size_t bits, std::uint64_t seed) {
  if (bits < 8) throw ParameterError("ElGamal modulus needs at least 8 bits");
  Rng rng(seed);
  const BigInt p = random_prime(bits, rng);
  const BigInt g = rng.range(2, p - 2);
  return elgamal_key_from_secret(p, g, rng.range(1, p - 2));
}

SignatureSample elgamal_sign(const ElGamalKey& key, const BigInt& h, std::optional<BigInt> k,
                             std::uint64_t seed) {
  const BigInt order = key.p - 1;
  NonceSource nonces(std::move(k), seed);
  const BigInt hn = mod(h, order);
  for (;;) {
    const BigInt nonce = nonces.next(order);
    if (gcd(nonce, order) != 1) continue;
    const BigInt r = powm(key.g, nonce, key.p);
    const BigInt s = mod(modinv_ref(nonce, order) * (hn - r * key.x), order);
    if (s == 0) continue;
    return {r, s, hn, nonce, std::nullopt, std::nullopt};
  }
}

bool elgamal_verify(const ElGamalKey& key, const SignatureSample& sig) {
  if (sig.r <= 0 || sig.r >= key.p || sig.s <= 0 || sig.s >= key.p - 1) return false;
  const BigInt lhs = mod(powm(key.y, sig.r, key.p) * powm(sig.r, sig.s, key.p), key.p);
  return lhs == powm(key.g, sig.h, key.p);
}

}  // namespace copycat
