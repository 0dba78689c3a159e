#include <doctest.h>

#include <algorithm>

#include "copycat/error.hpp"
#include "copycat/victims.hpp"

using namespace copycat;

namespace {

// Signed extended Euclid on residues.
std::optional<BigInt> ext_euclid_inverse(const BigInt& a, const BigInt& m) {
  BigInt r0 = m, r1 = mod(a, m), s0 = 0, s1 = 1;
  while (r1 != 0) {
    const BigInt q = r0 / r1;
    BigInt t = r0 - q * r1;
    r0 = r1;
    r1 = t;
    t = s0 - q * s1;
    s0 = s1;
    s1 = t;
  }
  if (r0 != 1) return std::nullopt;
  return mod(s0, m);
}

BigInt school_gcd(BigInt a, BigInt b) {
  while (b != 0) {
    BigInt t = a % b;
    a = b;
    b = t;
  }
  return a;
}

long brute_inverse(long a, long m) {
  for (long x = 0; x < m; ++x) {
    if (a * x % m == 1) return x;
  }
  return -1;
}

std::size_t count(const BranchTrace& t, Event e) {
  return static_cast<std::size_t>(std::count(t.events.begin(), t.events.end(), e));
}

}  // namespace

TEST_CASE("(3, 7) -> 5 for every inversion variant") {
  const long expected = brute_inverse(3, 7);
  CHECK(expected == 5);
  const InverseResult full = beea_full(3, 7);
  const InverseResult compact = beea_compact(3, 7);
  const InverseResult x = algx_modinv(3, 7);
  CHECK(full.inverse == expected);
  CHECK(compact.inverse == expected);
  CHECK(x.inverse == expected);
  // Re-execution gives the same trace.
  CHECK(beea_full(3, 7).trace == full.trace);
  CHECK(algx_modinv(3, 7).trace == x.trace);
  CHECK(full.trace.variant == Variant::BeeaFull);
  CHECK(compact.trace.variant == Variant::BeeaCompact);
  CHECK(x.trace.variant == Variant::AlgX);
}

TEST_CASE("u = 1 never enters the u loop") {
  for (long v : {2L, 7L, 1000L, 65537L}) {
    const InverseResult r = beea_full(1, v);
    CHECK(r.inverse == 1);
    CHECK(count(r.trace, Event::U_HALVE_ADJUST) == 0);
    CHECK(count(r.trace, Event::U_HALVE_PLAIN) == 0);
  }
}

TEST_CASE("inversions agree with extended Euclid on random inputs") {
  Rng rng(101);
  for (int i = 0; i < 10000; ++i) {
    const BigInt v = rng.range(3, pow2(64));
    const BigInt u = rng.range(1, v - 1);
    const auto want = ext_euclid_inverse(u, v);
    const InverseResult full = beea_full(u, v);
    CHECK(full.inverse == want);
    CHECK(full.gcd == school_gcd(u, v));
    const InverseResult x = algx_modinv(u, v);
    CHECK(x.inverse == want);
    if (is_odd(v)) {
      const InverseResult compact = beea_compact(u, v);
      CHECK(compact.inverse == want);
      CHECK(compact.inverse == full.inverse);
    }
  }
}

TEST_CASE("beea_compact needs an odd modulus") {
  CHECK_THROWS_AS(beea_compact(3, 8), ParameterError);
  CHECK_THROWS_AS(beea_full(0, 8), ParameterError);
  CHECK_THROWS_AS(algx_modinv(3, 0), ParameterError);
  CHECK_FALSE(beea_full(4, 8).inverse);
  CHECK(beea_full(4, 8).gcd == 4);
}

TEST_CASE("BEEA linear invariants hold after every event") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const BigInt v = rng.range(3, pow2(80));
    const BigInt u = rng.range(1, v - 1);
    const BigInt x = mod(u, v);
    std::size_t events = 0;
    beea_full(u, v, [&](Event, const BeeaState& s) {
      ++events;
      CHECK(s.a * x + s.b * v == s.u);
      CHECK(s.c * x + s.d * v == s.v);
    });
    if (is_odd(v)) {
      beea_compact(u, v, [&](Event, const BeeaState& s) {
        CHECK(mod(s.b * u - s.u, v) == 0);
        CHECK(mod(s.d * u - s.v, v) == 0);
      });
    }
    CHECK(events == beea_full(u, v).trace.events.size());
  }
}

TEST_CASE("Alg-X linear invariants hold after every event") {
  Rng rng(6);
  for (int i = 0; i < 300; ++i) {
    const BigInt v = rng.range(3, pow2(96));
    const BigInt u = rng.range(1, v - 1);
    algx_modinv(u, v, [&](Event, const AlgxState& s) {
      CHECK(u * s.u1 + v * s.u2 == s.u3);
      CHECK(u * s.v1 + v * s.v2 == s.v3);
      CHECK(u * s.t1 + v * s.t2 == s.t3);
    });
  }
}

TEST_CASE("binary gcd") {
  const GcdResult r = openssl_bgcd(12, 8);
  CHECK(r.gcd == 4);
  // Both shared factors of two are removed by even/even steps.
  CHECK(count(r.trace, Event::GCD_EE) == 2);
  const GcdResult same = openssl_bgcd(77, 77);
  CHECK(same.gcd == 77);
  CHECK(same.trace.events.front() == Event::GCD_NOSWAP);
  CHECK(same.trace.events[1] == Event::GCD_OO);
  Rng rng(8);
  for (int i = 0; i < 10000; ++i) {
    const BigInt a = rng.range(1, pow2(128) - 1);
    const BigInt b = rng.range(1, pow2(128) - 1);
    CHECK(openssl_bgcd(a, b).gcd == school_gcd(a, b));
  }
}

TEST_CASE("Euclid division count") {
  std::vector<long> fib{0, 1};
  while (fib.size() <= 20) fib.push_back(fib[fib.size() - 1] + fib[fib.size() - 2]);
  // Direct count of the remainder chain.
  long a = fib[20], b = fib[19], divisions = 0;
  while (b != 0) {
    const long t = a % b;
    a = b;
    b = t;
    ++divisions;
  }
  const GcdResult r = euclid_gcd(fib[20], fib[19]);
  CHECK(r.gcd == 1);
  CHECK(r.trace.events.size() == static_cast<std::size_t>(divisions));
  CHECK(divisions == 18);
  CHECK(euclid_gcd(35 * 12, 12).trace.events.size() == 1);
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    const BigInt x = rng.range(1, pow2(128) - 1);
    const BigInt y = rng.range(1, pow2(128) - 1);
    CHECK(euclid_gcd(x, y).gcd == school_gcd(x, y));
  }
}

TEST_CASE("dummy step counts") {
  CHECK(ecc_mulmod_steps(0b00010110, 8).steps == std::vector<int>{49, 49, 49, 46, 46, 46, 46, 46});
  CHECK(ecc_mulmod_steps(1, 8).steps == std::vector<int>{49, 49, 49, 49, 49, 49, 49, 46});
  CHECK(ecc_mulmod_steps(0b10000001, 8).steps == std::vector<int>(8, 46));
  CHECK_THROWS_AS(ecc_mulmod_steps(0, 8), ParameterError);
  CHECK_THROWS_AS(ecc_mulmod_steps(256, 8), ParameterError);
}

TEST_CASE("ladder with dummy steps computes k G") {
  const Curve c = toy_curve();
  const int bits = static_cast<int>(bit_length(c.n));
  Rng rng(10);
  for (int i = 0; i < 20; ++i) {
    const BigInt k = rng.range(1, c.n - 1);
    const MulmodResult r = ecc_mulmod_ex(c, k, c.g, bits);
    CHECK(r.point == ec_mul(c, k, c.g));
    CHECK(count(r.trace, Event::DUMMY_STEP) == static_cast<std::size_t>(bits) - bit_length(k));
    CHECK(r.trace.events.size() == static_cast<std::size_t>(bits));
  }
}

TEST_CASE("event and variant names round trip") {
  for (std::size_t i = 0; i < kEventCount; ++i) {
    const Event e = static_cast<Event>(i);
    CHECK(event_from_name(event_name(e)) == e);
  }
  for (Variant v : {Variant::BeeaFull, Variant::BeeaCompact, Variant::AlgX, Variant::Bgcd, Variant::Euclid,
                    Variant::EccMulmod}) {
    CHECK(variant_from_id(variant_id(v)) == v);
  }
  CHECK(in_alphabet(Variant::BeeaCompact, Event::CMP_S1));
  CHECK_FALSE(in_alphabet(Variant::AlgX, Event::CMP_S1));
}
