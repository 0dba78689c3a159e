#pragma once

// Instrumented reimplementations of the leaky inversion and gcd routines.
// Every victim returns its mathematical result together with the sequence of
// secret-dependent branch outcomes it took.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "copycat/bigint.hpp"
#include "copycat/schemes.hpp"

namespace copycat {

enum class Event : std::uint8_t {
  U_HALVE_PLAIN,
  U_HALVE_ADJUST,
  V_HALVE_PLAIN,
  V_HALVE_ADJUST,
  CMP_S1,
  CMP_S2,
  T3_HALVE_PLAIN,
  T3_HALVE_ADJUST,
  T3_POS,
  T3_NEG,
  T1_NEG_ADJUST,
  T1_NONNEG,
  INIT_U_ODD,
  INIT_U_EVEN,
  GCD_OO,
  GCD_OE,
  GCD_EO,
  GCD_EE,
  GCD_SWAP,
  GCD_NOSWAP,
  DIV_STEP,
  DUMMY_STEP,
  REAL_STEP,
};

inline constexpr std::size_t kEventCount = static_cast<std::size_t>(Event::REAL_STEP) + 1;

std::string_view event_name(Event e);
// Throws ParseError for unknown names.
Event event_from_name(std::string_view name);

enum class Variant : std::uint8_t { BeeaFull, BeeaCompact, AlgX, Bgcd, Euclid, EccMulmod };

// "beea-full", "beea-compact", "algx", "bgcd", "euclid", "ecc-mulmod".
std::string_view variant_id(Variant v);
Variant variant_from_id(std::string_view id);

// Event alphabets are disjoint except that both BEEA forms share theirs.
bool in_alphabet(Variant v, Event e);

struct BranchTrace {
  Variant variant = Variant::BeeaFull;
  std::vector<Event> events;

  bool operator==(const BranchTrace& other) const = default;
};

struct InverseResult {
  std::optional<BigInt> inverse;  // set iff gcd == 1
  BigInt gcd;
  BranchTrace trace;
};

// State snapshots for invariant checks; the observer sees the state after
// every event.
struct BeeaState {
  BigInt u, v, a, b, c, d;
};
struct AlgxState {
  BigInt u1, u2, u3, v1, v2, v3, t1, t2, t3;
};
using BeeaObserver = std::function<void(Event, const BeeaState&)>;
using AlgxObserver = std::function<void(Event, const AlgxState&)>;

// Full BEEA with the a/c cofactors; works for any modulus v >= 2. Internally
// u_i starts at u mod v and the inverse is read from c.
InverseResult beea_full(const BigInt& u, const BigInt& v, const BeeaObserver& observer = nullptr);

// Odd-modulus BEEA without a/c. The odd modulus is the first operand of the
// subtraction loop and u is the second; the inverse is d.
InverseResult beea_compact(const BigInt& u, const BigInt& v,
                           const BeeaObserver& observer = nullptr);

// Signed three-vector variant, executed exactly as listed (including the
// final t1 < 0 correction).
InverseResult algx_modinv(const BigInt& u, const BigInt& v, const AlgxObserver& observer = nullptr);

struct GcdResult {
  BigInt gcd;
  BranchTrace trace;
};

// Binary gcd that always keeps a >= b; equal-parity-even steps accumulate the
// shared power of two.
GcdResult openssl_bgcd(const BigInt& a, const BigInt& b);

// Remainder-chain Euclid; one DIV_STEP per division.
GcdResult euclid_gcd(const BigInt& a, const BigInt& b);

inline constexpr int kDummyStepCount = 49;
inline constexpr int kRealStepCount = 46;

struct StepTrace {
  std::vector<int> steps;

  bool operator==(const StepTrace& other) const = default;
};

// One step count per scalar bit, most significant first.
StepTrace ecc_mulmod_steps(const BigInt& k, int order_bits);

struct MulmodResult {
  EcPoint point;
  BranchTrace trace;
};

// Ladder scalar multiplication that runs dummy operations until the first set
// bit of k, over order_bits bit positions.
MulmodResult ecc_mulmod_ex(const Curve& curve, const BigInt& k, const EcPoint& point,
                           int order_bits);

}  // namespace copycat
