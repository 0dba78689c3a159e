#pragma once

// Branch-and-prune factorisation of N from one control-flow trace of an RSA
// key-generation step: q^-1 mod p, e^-1 mod lambda(N), or gcd(p-1, q-1).
// Hypotheses fix p and q modulo 2^b; each is scored by replaying the victim
// on those low bits and counting how many trace events they corroborate.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "copycat/bigint.hpp"
#include "copycat/low_bits.hpp"
#include "copycat/victims.hpp"

namespace copycat {

struct TestOutcome {
  std::size_t verified = 0;    // events corroborated before precision ran out
  bool contradiction = false;  // some checked outcome disagrees with the trace
  bool complete = false;       // every event and the terminal state checked
};

// Replays beea_full(x, y) over partially known inputs.
TestOutcome replay_beea_partial(const BranchTrace& trace, const PartialInt& x, const PartialInt& y);
// Replays openssl_bgcd(a, b) over partially known inputs.
TestOutcome replay_bgcd_partial(const BranchTrace& trace, const PartialInt& a, const PartialInt& b);

// Trace of beea_full(q, p); p_s, q_s are p, q mod 2^bits.
TestOutcome test_t(const BranchTrace& trace, const BigInt& p_s, const BigInt& q_s, std::size_t bits);
// Trace of beea_full(e, lambda); lambda_s is lambda mod 2^bits.
TestOutcome test_t_lambda(const BranchTrace& trace, const BigInt& lambda_s, std::size_t bits,
                          const BigInt& e);
// Trace of openssl_bgcd(p - 1, q - 1).
TestOutcome test_t_gcd(const BranchTrace& trace, const BigInt& p_s, const BigInt& q_s,
                       std::size_t bits);

struct Hypothesis {
  std::size_t steps = 0;
  std::size_t b = 0;  // p_s, q_s are p, q mod 2^b
  BigInt p_s;
  BigInt q_s;
  BigInt r_s;  // joint masked search only: r mod 2^b
  int i = 0;   // guessed gcd(p-1, q-1) = 2^i (lambda search only)
  std::uint64_t seq = 0;
};

struct SearchOptions {
  // Stop after this many expansions (0 = unlimited).
  std::size_t max_expansions = 0;
  // Ground truth for instrumentation only; never consulted for decisions.
  std::optional<std::pair<BigInt, BigInt>> truth;
  std::optional<BigInt> truth_r;
  // Assert p_s q_s == N mod 2^b on every popped hypothesis.
  bool check_invariants = true;
};

struct SearchStats {
  std::size_t expanded = 0;
  std::size_t pushed = 0;
  std::size_t peak_queue = 0;
  std::size_t max_verified = 0;
  double seconds = 0;
  // Instrumentation: deepest b at which the true low bits were expanded, and
  // whether they were ever discarded.
  std::size_t truth_depth = 0;
  bool truth_pruned = false;
};

struct Factorization {
  std::optional<std::pair<BigInt, BigInt>> factors;  // (p, q) with p > q
  int i = 0;                                         // lambda search: exponent that succeeded
  std::optional<BigInt> r;                           // masked search: recovered r when joint
  SearchStats stats;
};

// Throws NotFoundError when the queue runs dry.
Factorization recover_pq_from_crt_trace(const BranchTrace& trace, const BigInt& n,
                                        const SearchOptions& options = {});

// Empty `factors` when gcd(p-1, q-1) is not 2^i for some i <= l_max.
Factorization recover_pq_from_d_trace(const BranchTrace& trace, const BigInt& e, const BigInt& n,
                                      int l_max = 8, const SearchOptions& options = {});

// Throws NotFoundError when the queue runs dry.
Factorization recover_pq_from_gcd_trace(const BranchTrace& trace, const BigInt& n,
                                        const SearchOptions& options = {});

// trace_b is of (e r)^-1 mod lambda. With r known the lambda search runs on
// e*r; otherwise trace_gcd must be the openssl_bgcd(r, lambda) trace and r is
// searched jointly with p and q. ParameterError if neither is available.
Factorization masked_d_attack(const BranchTrace& trace_b, const std::optional<BranchTrace>& trace_gcd,
                              const BigInt& e, const std::optional<BigInt>& r, const BigInt& n,
                              int l_max = 8, const SearchOptions& options = {});

// key=value lines: found, p, q, i, expanded, pushed, peak_queue,
// max_verified, seconds.
std::string format_report(const Factorization& result);

}  // namespace copycat
