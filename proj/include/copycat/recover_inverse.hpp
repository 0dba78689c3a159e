#pragma once

// Single-trace recovery of the secret operand of a modular inversion whose
// modulus is public. Every intermediate value of the victim is carried as a
// linear form (alpha*U + beta) / 2^shift in the unknown U; each parity outcome
// in the trace pins U modulo a growing power of two, and the terminal state
// of a complete trace yields U exactly.

#include <cstddef>
#include <optional>
#include <vector>

#include "copycat/bigint.hpp"
#include "copycat/schemes.hpp"
#include "copycat/victims.hpp"

namespace copycat {

struct LinearForm {
  BigInt alpha;
  BigInt beta;
  std::size_t shift = 0;

  static LinearForm unknown() { return {1, 0, 0}; }
  static LinearForm constant(const BigInt& c) { return {0, c, 0}; }

  LinearForm operator+(const LinearForm& o) const;
  LinearForm operator-(const LinearForm& o) const;
  LinearForm operator-() const;
  LinearForm plus(const BigInt& c) const;
  // Exact division by two, valid once the value is known to be even.
  LinearForm halved() const;
  // Value at a concrete U; only meaningful when the division is exact.
  BigInt evaluate(const BigInt& u) const;
};

struct PartialOperand {
  std::optional<BigInt> value;  // set for complete traces
  BigInt low_bits;              // U mod 2^resolved_bits
  std::size_t resolved_bits = 0;
  std::size_t events_consumed = 0;
  std::size_t peak_candidates = 0;
};

// Recovers u < v from a complete trace of `trace.variant`(u, v). Supported
// variants: BeeaFull, BeeaCompact, AlgX. Throws NoSolutionError with the
// index of the first contradicting event, or with the trace length when the
// terminal state admits no operand that replays to the same trace.
BigInt recover_unknown_operand(const BranchTrace& trace, const BigInt& v);

// Same replay without the terminal step: for prefixes of a trace, returns the
// low bits fixed so far.
PartialOperand recover_partial_operand(const BranchTrace& trace, const BigInt& v);

// Resolved-bit counts after each event of a complete or truncated trace.
std::vector<std::size_t> resolved_bits_per_event(const BranchTrace& trace, const BigInt& v);

// x = r^-1 (s k - h) mod n. ParameterError if r has no inverse.
BigInt dsa_key_from_nonce(const SignatureSample& sample, const BigInt& k, const BigInt& n);
// x = r^-1 (h - s k) mod (p - 1). NoInverseError if gcd(r, p - 1) != 1.
BigInt elgamal_key_from_nonce(const SignatureSample& sample, const BigInt& k, const BigInt& p);

struct BlindingTraces {
  // Trace of the inversion the signer runs on its (possibly masked) nonce:
  // k^-1 when the nonce is not masked, (k b)^-1 otherwise.
  std::optional<BranchTrace> nonce_inverse;
  // Trace of b^-1; when present the first trace is taken to be of (k b)^-1.
  std::optional<BranchTrace> blinding_inverse;
};

// Recovers the nonce through the leaky inversions and returns
// d = r^-1 (s k - h) mod n.
BigInt ecdsa_blinding_attack(const BlindingTraces& traces, const SignatureSample& sample,
                             const BigInt& n);

}  // namespace copycat
