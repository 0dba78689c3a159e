#include <doctest.h>

#include "copycat/error.hpp"
#include "copycat/recover_inverse.hpp"

using namespace copycat;

namespace {

BranchTrace trace_of(Variant variant, const BigInt& u, const BigInt& v) {
  switch (variant) {
    case Variant::BeeaFull: return beea_full(u, v).trace;
    case Variant::BeeaCompact: return beea_compact(u, v).trace;
    default: return algx_modinv(u, v).trace;
  }
}

bool is_halving(Event e) {
  return e == Event::U_HALVE_PLAIN || e == Event::U_HALVE_ADJUST || e == Event::V_HALVE_PLAIN ||
         e == Event::V_HALVE_ADJUST || e == Event::T3_HALVE_PLAIN || e == Event::T3_HALVE_ADJUST;
}

// Random coprime pair with v of exactly `bits` bits (odd for the compact form).
std::pair<BigInt, BigInt> coprime_pair(Rng& rng, std::size_t bits, bool odd) {
  for (;;) {
    BigInt v = rng.bits(bits);
    mpz_setbit(v.get_mpz_t(), bits - 1);
    if (odd) mpz_setbit(v.get_mpz_t(), 0);
    const BigInt u = rng.range(1, v - 1);
    if (gcd(u, v) == 1) return {u, v};
  }
}

long naive_pow(long b, long e, long m) {
  long r = 1;
  for (long i = 0; i < e; ++i) r = r * b % m;
  return r;
}

long naive_inverse(long a, long m) {
  for (long x = 1; x < m; ++x) {
    if (a * x % m == 1) return x;
  }
  return 0;
}

}  // namespace

TEST_CASE("small worked cases") {
  CHECK(recover_unknown_operand(beea_compact(0x2B, 101).trace, 101) == 0x2B);
  for (Variant v : {Variant::BeeaFull, Variant::BeeaCompact, Variant::AlgX}) {
    CHECK(recover_unknown_operand(trace_of(v, 1, 101), 101) == 1);
    CHECK(recover_unknown_operand(trace_of(v, 3, 7), 7) == 3);
  }
  CHECK(recover_unknown_operand(beea_full(5, 64).trace, 64) == 5);
}

TEST_CASE("Alg-X traces of 160-bit nonces") {
  Rng rng(160);
  for (int i = 0; i < 100; ++i) {
    const auto [k, n] = coprime_pair(rng, 160, false);
    CHECK(recover_unknown_operand(algx_modinv(k, n).trace, n) == k);
  }
}

TEST_CASE("completeness and soundness at 64, 160 and 256 bits") {
  Rng rng(7);
  for (Variant variant : {Variant::BeeaFull, Variant::BeeaCompact, Variant::AlgX}) {
    for (std::size_t bits : {64u, 160u, 256u}) {
      for (int i = 0; i < 100; ++i) {
        const auto [u, v] = coprime_pair(rng, bits, variant == Variant::BeeaCompact);
        const BranchTrace t = trace_of(variant, u, v);
        const BigInt got = recover_unknown_operand(t, v);
        CHECK(got == u);
        CHECK(trace_of(variant, got, v) == t);
      }
    }
  }
}

TEST_CASE("inconsistent traces have no solution") {
  Rng rng(8);
  std::size_t rejected = 0;
  for (int i = 0; i < 100; ++i) {
    const auto [u, v] = coprime_pair(rng, 64, true);
    BranchTrace t = beea_compact(u, v).trace;
    const std::size_t j = rng.below(static_cast<unsigned long>(t.events.size())).get_ui();
    // Flip the adjust flag of some event.
    Event& e = t.events[j];
    switch (e) {
      case Event::U_HALVE_PLAIN: e = Event::U_HALVE_ADJUST; break;
      case Event::U_HALVE_ADJUST: e = Event::U_HALVE_PLAIN; break;
      case Event::V_HALVE_PLAIN: e = Event::V_HALVE_ADJUST; break;
      case Event::V_HALVE_ADJUST: e = Event::V_HALVE_PLAIN; break;
      case Event::CMP_S1: e = Event::CMP_S2; break;
      default: e = Event::CMP_S1; break;
    }
    try {
      const BigInt got = recover_unknown_operand(t, v);
      // Any answer must replay to the tampered trace.
      CHECK(beea_compact(got, v).trace == t);
    } catch (const NoSolutionError& err) {
      CHECK(err.event_index() <= t.events.size());
      ++rejected;
    }
  }
  CHECK(rejected > 90);
  CHECK_THROWS_AS(recover_unknown_operand({Variant::BeeaFull, {Event::GCD_OO}}, 7), NoSolutionError);
  CHECK_THROWS_AS(recover_unknown_operand({Variant::Bgcd, {}}, 7), ParameterError);
}

TEST_CASE("resolved bits follow the halvings") {
  Rng rng(9);
  for (Variant variant : {Variant::BeeaFull, Variant::BeeaCompact, Variant::AlgX}) {
    for (int i = 0; i < 50; ++i) {
      const auto [u, v] = coprime_pair(rng, 128, variant == Variant::BeeaCompact);
      const BranchTrace t = trace_of(variant, u, v);
      const auto resolved = resolved_bits_per_event(t, v);
      REQUIRE(resolved.size() == t.events.size());
      std::size_t halvings = 0, prev = 0;
      for (std::size_t j = 0; j < t.events.size(); ++j) {
        if (is_halving(t.events[j])) ++halvings;
        // Each halving fixes one bit; the odd check that ends a halving loop
        // fixes at most one more, counted at the next event.
        CHECK(resolved[j] >= halvings);
        CHECK(resolved[j] <= halvings + 1);
        CHECK(resolved[j] >= prev);
        prev = resolved[j];
      }
      // Prefixes give the true low bits.
      for (std::size_t cut : {t.events.size() / 4, t.events.size() / 2}) {
        const BranchTrace prefix{variant, std::vector<Event>(t.events.begin(), t.events.begin() + static_cast<long>(cut))};
        const PartialOperand p = recover_partial_operand(prefix, v);
        CHECK_FALSE(p.value);
        CHECK(p.resolved_bits == (cut ? resolved[cut - 1] : 0));
        CHECK(p.low_bits == low_bits(u, p.resolved_bits));
      }
      const PartialOperand full = recover_partial_operand(t, v);
      REQUIRE(full.value);
      CHECK(*full.value == u);
    }
  }
}

TEST_CASE("DSA and ElGamal keys from nonces") {
  // p = 23, n = 11, g = 4, x = 7, h = 5, k = 9 by direct evaluation.
  const long n = 11, x = 7, h = 5, k = 9;
  const long r = naive_pow(4, k, 23) % n;
  const long s = naive_inverse(k, n) * ((h + x * r) % n) % n;
  SignatureSample dsa{r, s, h, std::nullopt, std::nullopt, std::nullopt};
  CHECK(dsa_key_from_nonce(dsa, k, n) == x);
  CHECK(powm(4, dsa_key_from_nonce(dsa, k + 1, n), 23) != naive_pow(4, x, 23));

  // p = 23, g = 5, x = 6, h = 10, k = 7: r = 17 is invertible mod 22.
  const long ek = 7, ex = 6, eh = 10;
  const long er = naive_pow(5, ek, 23);
  const long es = naive_inverse(ek, 22) * (((eh - ex * er) % 22 + 22) % 22) % 22;
  SignatureSample eg{er, es, eh, std::nullopt, std::nullopt, std::nullopt};
  CHECK(elgamal_key_from_nonce(eg, ek, 23) == ex);
  CHECK(powm(5, elgamal_key_from_nonce(eg, ek + 2, 23), 23) != naive_pow(5, ex, 23));
  eg.r = 10;
  CHECK_THROWS_AS(elgamal_key_from_nonce(eg, ek, 23), NoInverseError);
  dsa.r = 0;
  CHECK_THROWS_AS(dsa_key_from_nonce(dsa, k, n), ParameterError);

  const DsaKey key = dsa_keygen(dsa_paramgen(512, 160, 3), 4);
  const SignatureSample sig = dsa_sign(key, 99, std::nullopt, 5);
  CHECK(dsa_key_from_nonce(sig, *sig.k, key.params.n) == key.x);
  const ElGamalKey ekey = elgamal_keygen(128, 6);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const SignatureSample es2 = elgamal_sign(ekey, 1234, std::nullopt, i);
    if (gcd(es2.r, ekey.p - 1) != 1) continue;
    CHECK(elgamal_key_from_nonce(es2, *es2.k, ekey.p) == ekey.x);
  }
}

TEST_CASE("ECDSA blinding attack") {
  const EcdsaKey key = ecdsa_keygen(curve_by_name("p256"), 11);
  const BigInt& n = key.curve.n;
  Rng rng(12);
  for (int i = 0; i < 5; ++i) {
    const BigInt k = rng.range(2, n - 2), b = rng.range(2, n - 2);
    // Unmasked nonce inversion.
    const SignatureSample plain = ecdsa_sign(key, 1000 + i, k, 1);
    CHECK(ecdsa_blinding_attack({algx_modinv(k, n).trace, std::nullopt}, plain, n) == key.d);
    // Masked: (k b)^-1 and b^-1 both leak.
    const SignatureSample blinded = ecdsa_sign_blinded(key, 2000 + i, k, b);
    const BlindingTraces both{algx_modinv(mod(k * b, n), n).trace, algx_modinv(b, n).trace};
    CHECK(ecdsa_blinding_attack(both, blinded, n) == key.d);
  }
  const SignatureSample any = ecdsa_sign(key, 1, std::nullopt, 2);
  CHECK_THROWS_AS(ecdsa_blinding_attack({std::nullopt, std::nullopt}, any, n), ParameterError);
  CHECK_THROWS_AS(ecdsa_blinding_attack({std::nullopt, algx_modinv(5, n).trace}, any, n), ParameterError);
}
