#include "copycat/victims.hpp"

#include <array>
#include <utility>

#include "copycat/error.hpp"

namespace copycat {
namespace {

constexpr std::array<std::string_view, kEventCount> kEventNames = {
    "U_HALVE_PLAIN", "U_HALVE_ADJUST", "V_HALVE_PLAIN", "V_HALVE_ADJUST", "CMP_S1",
    "CMP_S2",        "T3_HALVE_PLAIN", "T3_HALVE_ADJUST", "T3_POS",       "T3_NEG",
    "T1_NEG_ADJUST", "T1_NONNEG",      "INIT_U_ODD",      "INIT_U_EVEN",  "GCD_OO",
    "GCD_OE",        "GCD_EO",         "GCD_EE",          "GCD_SWAP",     "GCD_NOSWAP",
    "DIV_STEP",      "DUMMY_STEP",     "REAL_STEP"};

constexpr std::array<std::string_view, 6> kVariantIds = {"beea-full", "beea-compact", "algx",
                                                         "bgcd",      "euclid",       "ecc-mulmod"};

void halve(BigInt& x) { mpz_fdiv_q_2exp(x.get_mpz_t(), x.get_mpz_t(), 1); }

// Exact halving of a value known to be even; keeps the sign.
void halve_exact(BigInt& x) { mpz_divexact_ui(x.get_mpz_t(), x.get_mpz_t(), 2); }

}  // namespace

std::string_view event_name(Event e) { return kEventNames[static_cast<std::size_t>(e)]; }

Event event_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == name) return static_cast<Event>(i);
  }
  throw ParseError("unknown event '" + std::string(name) + "'", 0);
}

std::string_view variant_id(Variant v) { return kVariantIds[static_cast<std::size_t>(v)]; }

Variant variant_from_id(std::string_view id) {
  for (std::size_t i = 0; i < kVariantIds.size(); ++i) {
    if (kVariantIds[i] == id) return static_cast<Variant>(i);
  }
  throw ParseError("unknown variant '" + std::string(id) + "'", 0);
}

bool in_alphabet(Variant v, Event e) {
  const auto i = static_cast<int>(e);
  switch (v) {
    case Variant::BeeaFull:
    case Variant::BeeaCompact:
      return i <= static_cast<int>(Event::CMP_S2);
    case Variant::AlgX:
      return i >= static_cast<int>(Event::T3_HALVE_PLAIN) && i <= static_cast<int>(Event::INIT_U_EVEN);
    case Variant::Bgcd:
      return i >= static_cast<int>(Event::GCD_OO) && i <= static_cast<int>(Event::GCD_NOSWAP);
    case Variant::Euclid:
      return e == Event::DIV_STEP;
    case Variant::EccMulmod:
      return e == Event::DUMMY_STEP || e == Event::REAL_STEP;
  }
  return false;
}

InverseResult beea_full(const BigInt& u, const BigInt& v, const BeeaObserver& observer) {
  if (u <= 0 || v < 2) throw ParameterError("beea_full needs u > 0 and v >= 2");
  InverseResult out;
  out.trace.variant = Variant::BeeaFull;
  const BigInt x = mod(u, v);
  const BigInt& y = v;
  if ((is_even(x) && is_even(y)) || x == 0) {
    out.gcd = gcd(u, v);
    return out;
  }
  BeeaState st{x, y, 1, 0, 0, 1};
  auto emit = [&](Event e) {
    out.trace.events.push_back(e);
    if (observer) observer(e, st);
  };
  do {
    while (is_even(st.u)) {
      halve(st.u);
      const bool adjust = is_odd(st.a) || is_odd(st.b);
      if (adjust) {
        st.a += y;
        st.b -= x;
      }
      halve_exact(st.a);
      halve_exact(st.b);
      emit(adjust ? Event::U_HALVE_ADJUST : Event::U_HALVE_PLAIN);
    }
    while (is_even(st.v)) {
      halve(st.v);
      const bool adjust = is_odd(st.c) || is_odd(st.d);
      if (adjust) {
        st.c += y;
        st.d -= x;
      }
      halve_exact(st.c);
      halve_exact(st.d);
      emit(adjust ? Event::V_HALVE_ADJUST : Event::V_HALVE_PLAIN);
    }
    if (st.u >= st.v) {
      st.u -= st.v;
      st.a -= st.c;
      st.b -= st.d;
      emit(Event::CMP_S1);
    } else {
      st.v -= st.u;
      st.c -= st.a;
      st.d -= st.b;
      emit(Event::CMP_S2);
    }
  } while (st.u != 0);
  out.gcd = st.v;
  if (st.v == 1) out.inverse = mod(st.c, y);
  return out;
}

InverseResult beea_compact(const BigInt& u, const BigInt& v, const BeeaObserver& observer) {
  if (u <= 0 || v < 3) throw ParameterError("beea_compact needs u > 0 and v >= 3");
  if (is_even(v)) throw ParameterError("beea_compact needs an odd modulus");
  InverseResult out;
  out.trace.variant = Variant::BeeaCompact;
  BeeaState st{v, u, 0, 0, 0, 1};
  auto emit = [&](Event e) {
    out.trace.events.push_back(e);
    if (observer) observer(e, st);
  };
  do {
    while (is_even(st.u)) {
      halve(st.u);
      const bool adjust = is_odd(st.b);
      if (adjust) st.b -= v;
      halve_exact(st.b);
      emit(adjust ? Event::U_HALVE_ADJUST : Event::U_HALVE_PLAIN);
    }
    while (is_even(st.v)) {
      halve(st.v);
      const bool adjust = is_odd(st.d);
      if (adjust) st.d -= v;
      halve_exact(st.d);
      emit(adjust ? Event::V_HALVE_ADJUST : Event::V_HALVE_PLAIN);
    }
    if (st.u >= st.v) {
      st.u -= st.v;
      st.b -= st.d;
      emit(Event::CMP_S1);
    } else {
      st.v -= st.u;
      st.d -= st.b;
      emit(Event::CMP_S2);
    }
  } while (st.u != 0);
  out.gcd = st.v;
  if (st.v == 1) out.inverse = mod(st.d, v);
  return out;
}

InverseResult algx_modinv(const BigInt& u, const BigInt& v, const AlgxObserver& observer) {
  if (u <= 0 || v <= 0) throw ParameterError("algx_modinv needs u, v > 0");
  InverseResult out;
  out.trace.variant = Variant::AlgX;
  if (is_even(u) && is_even(v)) {
    out.gcd = gcd(u, v);
    return out;
  }
  AlgxState st{1, 0, u, v, 1 - u, v, 0, 0, 0};
  auto emit = [&](Event e) {
    out.trace.events.push_back(e);
    if (observer) observer(e, st);
  };
  if (is_odd(u)) {
    st.t1 = 0;
    st.t2 = -1;
    st.t3 = -v;
    emit(Event::INIT_U_ODD);
  } else {
    st.t1 = 1;
    st.t2 = 0;
    st.t3 = u;
    emit(Event::INIT_U_EVEN);
  }
  while (st.t3 != 0) {
    while (is_even(st.t3)) {
      const bool adjust = is_odd(st.t1) || is_odd(st.t2);
      if (adjust) {
        st.t1 += v;
        st.t2 -= u;
      }
      halve_exact(st.t1);
      halve_exact(st.t2);
      halve_exact(st.t3);
      emit(adjust ? Event::T3_HALVE_ADJUST : Event::T3_HALVE_PLAIN);
    }
    if (st.t3 > 0) {
      st.u1 = st.t1;
      st.u2 = st.t2;
      st.u3 = st.t3;
      emit(Event::T3_POS);
    } else {
      st.v1 = v - st.t1;
      st.v2 = -u - st.t2;
      st.v3 = -st.t3;
      emit(Event::T3_NEG);
    }
    st.t1 = st.u1 - st.v1;
    st.t2 = st.u2 - st.v2;
    st.t3 = st.u3 - st.v3;
    if (st.t1 < 0) {
      st.t1 += v;
      st.t2 -= u;
      emit(Event::T1_NEG_ADJUST);
    } else {
      emit(Event::T1_NONNEG);
    }
  }
  out.gcd = st.u3;
  if (st.u3 == 1) out.inverse = mod(st.u1, v);
  return out;
}

GcdResult openssl_bgcd(const BigInt& a_in, const BigInt& b_in) {
  if (a_in <= 0 || b_in <= 0) throw ParameterError("openssl_bgcd needs a, b > 0");
  GcdResult out;
  out.trace.variant = Variant::Bgcd;
  auto& ev = out.trace.events;
  BigInt a = a_in;
  BigInt b = b_in;
  std::size_t shift = 0;
  auto swap_check = [&]() {
    if (a < b) {
      std::swap(a, b);
      ev.push_back(Event::GCD_SWAP);
    } else {
      ev.push_back(Event::GCD_NOSWAP);
    }
  };
  swap_check();
  while (b != 0) {
    if (is_odd(a)) {
      if (is_odd(b)) {
        a -= b;
        halve(a);
        ev.push_back(Event::GCD_OO);
      } else {
        halve(b);
        ev.push_back(Event::GCD_OE);
      }
      swap_check();
    } else if (is_odd(b)) {
      halve(a);
      ev.push_back(Event::GCD_EO);
      swap_check();
    } else {
      halve(a);
      halve(b);
      ++shift;
      ev.push_back(Event::GCD_EE);
    }
  }
  out.gcd = a << shift;
  return out;
}

GcdResult euclid_gcd(const BigInt& a_in, const BigInt& b_in) {
  if (a_in <= 0 || b_in <= 0) throw ParameterError("euclid_gcd needs a, b > 0");
  GcdResult out;
  out.trace.variant = Variant::Euclid;
  BigInt a = a_in;
  BigInt b = b_in;
  while (b != 0) {
    BigInt r = a % b;
    a = std::move(b);
    b = std::move(r);
    out.trace.events.push_back(Event::DIV_STEP);
  }
  out.gcd = a;
  return out;
}

StepTrace ecc_mulmod_steps(const BigInt& k, int order_bits) {
  if (order_bits <= 0) throw ParameterError("order bits must be positive");
  if (k <= 0) throw ParameterError("scalar must be positive");
  if (bit_length(k) > static_cast<std::size_t>(order_bits)) {
    throw ParameterError("scalar wider than the order");
  }
  StepTrace out;
  const int zeros = order_bits - static_cast<int>(bit_length(k));
  out.steps.assign(zeros, kDummyStepCount);
  out.steps.resize(order_bits, kRealStepCount);
  return out;
}

MulmodResult ecc_mulmod_ex(const Curve& curve, const BigInt& k, const EcPoint& point,
                           int order_bits) {
  if (order_bits <= 0) throw ParameterError("order bits must be positive");
  if (k <= 0) throw ParameterError("scalar must be positive");
  if (bit_length(k) > static_cast<std::size_t>(order_bits)) {
    throw ParameterError("scalar wider than the order");
  }
  MulmodResult out;
  out.trace.variant = Variant::EccMulmod;
  EcPoint r0 = EcPoint::at_infinity();
  EcPoint r1 = point;
  EcPoint scratch0 = EcPoint::at_infinity();
  EcPoint scratch1 = point;
  bool started = false;
  for (int i = order_bits - 1; i >= 0; --i) {
    const bool bit = mpz_tstbit(k.get_mpz_t(), static_cast<mp_bitcnt_t>(i)) != 0;
    if (!started && !bit) {
      // Same operations as a real step, on values that are thrown away.
      scratch0 = ec_add(curve, scratch0, scratch1);
      scratch1 = ec_double(curve, scratch1);
      out.trace.events.push_back(Event::DUMMY_STEP);
      continue;
    }
    started = true;
    if (bit) {
      r0 = ec_add(curve, r0, r1);
      r1 = ec_double(curve, r1);
    } else {
      r1 = ec_add(curve, r0, r1);
      r0 = ec_double(curve, r0);
    }
    out.trace.events.push_back(Event::REAL_STEP);
  }
  out.point = r0;
  return out;
}

}  // namespace copycat
