#include "copycat/recover_inverse.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

#include "copycat/error.hpp"

namespace copycat {
namespace {

std::size_t tz_or_max(const BigInt& x) {
  return x == 0 ? std::numeric_limits<std::size_t>::max() : trailing_zeros(x);
}

LinearForm normalized(LinearForm f) {
  const std::size_t t = std::min({tz_or_max(f.alpha), tz_or_max(f.beta), f.shift});
  if (t > 0) {
    f.alpha >>= t;  // exact: both are divisible by 2^t
    f.beta >>= t;
    f.shift -= t;
  }
  return f;
}

BigInt inverse_pow2(const BigInt& odd, std::size_t bits) {
  if (bits <= 1) return 1;
  BigInt r;
  const BigInt m = pow2(bits);
  mpz_invert(r.get_mpz_t(), odd.get_mpz_t(), m.get_mpz_t());
  return r;
}

struct Cand {
  BigInt r;  // U mod 2^w
  std::size_t w;
};

// Set of residues of U still consistent with the parity outcomes seen so far.
class Solver {
 public:
  void require(const LinearForm& f, int parity, std::size_t event_index) {
    cands_ = apply(cands_, f, parity);
    check(event_index);
  }

  // any_odd == (a is odd || b is odd).
  void require_any_odd(const LinearForm& a, const LinearForm& b, bool any_odd,
                       std::size_t event_index) {
    if (any_odd) {
      auto first = apply(cands_, a, 1);
      auto second = apply(apply(cands_, a, 0), b, 1);
      first.insert(first.end(), second.begin(), second.end());
      cands_ = dedupe(std::move(first));
    } else {
      cands_ = apply(apply(cands_, a, 0), b, 0);
    }
    check(event_index);
  }

  const std::vector<Cand>& candidates() const { return cands_; }
  std::size_t peak() const { return peak_; }

  // Longest run of low bits shared by every candidate.
  std::pair<BigInt, std::size_t> resolved() const {
    std::size_t t = std::numeric_limits<std::size_t>::max();
    for (const auto& c : cands_) t = std::min(t, c.w);
    for (; t > 0; --t) {
      const BigInt first = low_bits(cands_[0].r, t);
      bool agree = true;
      for (const auto& c : cands_) agree = agree && low_bits(c.r, t) == first;
      if (agree) return {first, t};
    }
    return {0, 0};
  }

 private:
  static std::vector<Cand> dedupe(std::vector<Cand> in) {
    std::vector<Cand> out;
    for (auto& c : in) {
      const bool seen = std::any_of(out.begin(), out.end(),
                                    [&](const Cand& o) { return o.w == c.w && o.r == c.r; });
      if (!seen) out.push_back(std::move(c));
    }
    return out;
  }

  // Keeps candidates with parity((alpha U + beta) / 2^shift) == parity, i.e.
  // alpha U + beta == parity * 2^shift (mod 2^(shift+1)).
  static std::vector<Cand> apply(const std::vector<Cand>& in, const LinearForm& f, int parity) {
    const std::size_t big_m = f.shift + 1;
    const BigInt alpha = low_bits(f.alpha, big_m);
    const BigInt rhs = low_bits((parity ? pow2(f.shift) : BigInt(0)) - f.beta, big_m);
    if (alpha == 0) return rhs == 0 ? in : std::vector<Cand>{};
    const std::size_t v = trailing_zeros(alpha);
    if (low_bits(rhs, v) != 0) return {};
    const std::size_t m = big_m - v;
    const BigInt r = low_bits((rhs >> v) * inverse_pow2(alpha >> v, m), m);
    std::vector<Cand> out;
    for (const auto& c : in) {
      if (c.w >= m) {
        if (low_bits(c.r, m) == r) out.push_back(c);
      } else if (low_bits(r, c.w) == c.r) {
        out.push_back({r, m});
      }
    }
    return dedupe(std::move(out));
  }

  void check(std::size_t event_index) {
    if (cands_.empty()) throw NoSolutionError("parity outcome contradicts every candidate", event_index);
    peak_ = std::max(peak_, cands_.size());
  }

  std::vector<Cand> cands_{{0, 0}};
  std::size_t peak_ = 1;
};

struct Equation {
  LinearForm form;
  BigInt target;
};

struct ReplayOutcome {
  bool clean_end = false;
  std::vector<Equation> terminal;
  std::vector<std::size_t> resolved_after;  // per consumed event
  std::size_t consumed = 0;
};

class Cursor {
 public:
  explicit Cursor(const std::vector<Event>& ev) : ev_(ev) {}
  bool done() const { return pos_ >= ev_.size(); }
  Event peek() const { return ev_[pos_]; }
  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  const std::vector<Event>& ev_;
  std::size_t pos_ = 0;
};

bool is_u_halve(Event e) { return e == Event::U_HALVE_PLAIN || e == Event::U_HALVE_ADJUST; }
bool is_v_halve(Event e) { return e == Event::V_HALVE_PLAIN || e == Event::V_HALVE_ADJUST; }
bool is_cmp(Event e) { return e == Event::CMP_S1 || e == Event::CMP_S2; }

[[noreturn]] void unexpected(const Cursor& cur) {
  throw NoSolutionError(std::string("unexpected event ") + std::string(event_name(cur.peek())),
                        cur.pos());
}

// beea_full(U, V): u = U, v = V; a, b, c, d carry the cofactors of U and V.
ReplayOutcome replay_full(const std::vector<Event>& ev, const BigInt& modulus, Solver& s) {
  ReplayOutcome out;
  Cursor cur(ev);
  const LinearForm x = LinearForm::unknown();
  LinearForm u = x, v = LinearForm::constant(modulus);
  LinearForm a = LinearForm::constant(1), b = LinearForm::constant(0);
  LinearForm c = LinearForm::constant(0), d = LinearForm::constant(1);
  auto record = [&] {
    cur.advance();
    out.resolved_after.push_back(s.resolved().second);
  };
  while (!cur.done()) {
    while (!cur.done() && is_u_halve(cur.peek())) {
      const bool adjust = cur.peek() == Event::U_HALVE_ADJUST;
      s.require(u, 0, cur.pos());
      s.require_any_odd(a, b, adjust, cur.pos());
      u = u.halved();
      if (adjust) {
        a = a.plus(modulus);
        b = b - x;
      }
      a = a.halved();
      b = b.halved();
      record();
    }
    if (cur.done()) break;
    if (!is_v_halve(cur.peek()) && !is_cmp(cur.peek())) unexpected(cur);
    s.require(u, 1, cur.pos());
    while (!cur.done() && is_v_halve(cur.peek())) {
      const bool adjust = cur.peek() == Event::V_HALVE_ADJUST;
      s.require(v, 0, cur.pos());
      s.require_any_odd(c, d, adjust, cur.pos());
      v = v.halved();
      if (adjust) {
        c = c.plus(modulus);
        d = d - x;
      }
      c = c.halved();
      d = d.halved();
      record();
    }
    if (cur.done()) break;
    if (!is_cmp(cur.peek())) unexpected(cur);
    s.require(v, 1, cur.pos());
    const bool s1 = cur.peek() == Event::CMP_S1;
    if (s1) {
      u = u - v;
      a = a - c;
      b = b - d;
    } else {
      v = v - u;
      c = c - a;
      d = d - b;
    }
    record();
    if (cur.done()) out.clean_end = s1;
  }
  out.consumed = cur.pos();
  out.terminal = {{u, 0}, {v, 1}};
  return out;
}

// beea_compact(U, V): the odd modulus V is the first operand, U the second.
ReplayOutcome replay_compact(const std::vector<Event>& ev, const BigInt& modulus, Solver& s) {
  ReplayOutcome out;
  Cursor cur(ev);
  LinearForm u = LinearForm::constant(modulus), v = LinearForm::unknown();
  LinearForm b = LinearForm::constant(0), d = LinearForm::constant(1);
  auto record = [&] {
    cur.advance();
    out.resolved_after.push_back(s.resolved().second);
  };
  while (!cur.done()) {
    while (!cur.done() && is_u_halve(cur.peek())) {
      const bool adjust = cur.peek() == Event::U_HALVE_ADJUST;
      s.require(u, 0, cur.pos());
      s.require(b, adjust ? 1 : 0, cur.pos());
      u = u.halved();
      if (adjust) b = b.plus(-modulus);
      b = b.halved();
      record();
    }
    if (cur.done()) break;
    if (!is_v_halve(cur.peek()) && !is_cmp(cur.peek())) unexpected(cur);
    s.require(u, 1, cur.pos());
    while (!cur.done() && is_v_halve(cur.peek())) {
      const bool adjust = cur.peek() == Event::V_HALVE_ADJUST;
      s.require(v, 0, cur.pos());
      s.require(d, adjust ? 1 : 0, cur.pos());
      v = v.halved();
      if (adjust) d = d.plus(-modulus);
      d = d.halved();
      record();
    }
    if (cur.done()) break;
    if (!is_cmp(cur.peek())) unexpected(cur);
    s.require(v, 1, cur.pos());
    const bool s1 = cur.peek() == Event::CMP_S1;
    if (s1) {
      u = u - v;
      b = b - d;
    } else {
      v = v - u;
      d = d - b;
    }
    record();
    if (cur.done()) out.clean_end = s1;
  }
  out.consumed = cur.pos();
  out.terminal = {{u, 0}, {v, 1}};
  return out;
}

ReplayOutcome replay_algx(const std::vector<Event>& ev, const BigInt& modulus, Solver& s) {
  ReplayOutcome out;
  Cursor cur(ev);
  const LinearForm uu = LinearForm::unknown();
  const LinearForm vv = LinearForm::constant(modulus);
  LinearForm u1 = LinearForm::constant(1), u2 = LinearForm::constant(0), u3 = uu;
  LinearForm v1 = vv, v2 = LinearForm::constant(1) - uu, v3 = vv;
  LinearForm t1, t2, t3;
  auto record = [&] {
    cur.advance();
    out.resolved_after.push_back(s.resolved().second);
  };
  out.terminal = {{u3, 1}};
  if (cur.done()) return out;
  if (cur.peek() == Event::INIT_U_ODD) {
    s.require(uu, 1, cur.pos());
    t1 = LinearForm::constant(0);
    t2 = LinearForm::constant(-1);
    t3 = -vv;
  } else if (cur.peek() == Event::INIT_U_EVEN) {
    s.require(uu, 0, cur.pos());
    t1 = LinearForm::constant(1);
    t2 = LinearForm::constant(0);
    t3 = uu;
  } else {
    unexpected(cur);
  }
  record();
  while (!cur.done()) {
    while (!cur.done() && (cur.peek() == Event::T3_HALVE_PLAIN || cur.peek() == Event::T3_HALVE_ADJUST)) {
      const bool adjust = cur.peek() == Event::T3_HALVE_ADJUST;
      s.require(t3, 0, cur.pos());
      s.require_any_odd(t1, t2, adjust, cur.pos());
      if (adjust) {
        t1 = t1 + vv;
        t2 = t2 - uu;
      }
      t1 = t1.halved();
      t2 = t2.halved();
      t3 = t3.halved();
      record();
    }
    if (cur.done()) break;
    if (cur.peek() != Event::T3_POS && cur.peek() != Event::T3_NEG) unexpected(cur);
    s.require(t3, 1, cur.pos());
    if (cur.peek() == Event::T3_POS) {
      u1 = t1;
      u2 = t2;
      u3 = t3;
    } else {
      v1 = vv - t1;
      v2 = -uu - t2;
      v3 = -t3;
    }
    record();
    if (cur.done()) break;
    if (cur.peek() != Event::T1_NEG_ADJUST && cur.peek() != Event::T1_NONNEG) unexpected(cur);
    t1 = u1 - v1;
    t2 = u2 - v2;
    t3 = u3 - v3;
    if (cur.peek() == Event::T1_NEG_ADJUST) {
      t1 = t1 + vv;
      t2 = t2 - uu;
    }
    record();
    if (cur.done()) out.clean_end = true;
  }
  out.consumed = cur.pos();
  out.terminal = {{t3, 0}, {u3, 1}};
  return out;
}

ReplayOutcome replay(const BranchTrace& trace, const BigInt& v, Solver& s) {
  if (v < 2) throw ParameterError("modulus must be at least 2");
  switch (trace.variant) {
    case Variant::BeeaFull: return replay_full(trace.events, v, s);
    case Variant::BeeaCompact:
      if (is_even(v)) throw ParameterError("compact BEEA needs an odd modulus");
      return replay_compact(trace.events, v, s);
    case Variant::AlgX: return replay_algx(trace.events, v, s);
    default: break;
  }
  throw ParameterError("variant " + std::string(variant_id(trace.variant)) +
                       " is not an inversion victim");
}

BranchTrace rerun(Variant variant, const BigInt& u, const BigInt& v) {
  switch (variant) {
    case Variant::BeeaFull: return beea_full(u, v).trace;
    case Variant::BeeaCompact: return beea_compact(u, v).trace;
    default: return algx_modinv(u, v).trace;
  }
}

std::optional<BigInt> solve_terminal(const BranchTrace& trace, const BigInt& v,
                                     const ReplayOutcome& out, const Solver& s) {
  std::vector<BigInt> options;
  for (const auto& eq : out.terminal) {
    if (eq.form.alpha == 0) continue;
    const BigInt num = (eq.target << eq.form.shift) - eq.form.beta;
    if (!mpz_divisible_p(num.get_mpz_t(), eq.form.alpha.get_mpz_t())) continue;
    options.push_back(num / eq.form.alpha);
  }
  for (const auto& c : s.candidates()) {
    if (c.w >= bit_length(v)) options.push_back(c.r);
  }
  for (const auto& u : options) {
    if (u <= 0 || u >= v) continue;
    if (rerun(trace.variant, u, v) == trace) return u;
  }
  return std::nullopt;
}

}  // namespace

LinearForm LinearForm::operator+(const LinearForm& o) const {
  const std::size_t s = std::max(shift, o.shift);
  return normalized({(alpha << (s - shift)) + (o.alpha << (s - o.shift)),
                     (beta << (s - shift)) + (o.beta << (s - o.shift)), s});
}

LinearForm LinearForm::operator-(const LinearForm& o) const { return *this + (-o); }

LinearForm LinearForm::operator-() const { return {-alpha, -beta, shift}; }

LinearForm LinearForm::plus(const BigInt& c) const {
  return normalized({alpha, beta + (c << shift), shift});
}

LinearForm LinearForm::halved() const { return normalized({alpha, beta, shift + 1}); }

BigInt LinearForm::evaluate(const BigInt& u) const {
  BigInt num = alpha * u + beta;
  mpz_fdiv_q_2exp(num.get_mpz_t(), num.get_mpz_t(), shift);
  return num;
}

BigInt recover_unknown_operand(const BranchTrace& trace, const BigInt& v) {
  Solver s;
  const ReplayOutcome out = replay(trace, v, s);
  if (!out.clean_end) {
    throw NoSolutionError("trace does not end in a terminal state", trace.events.size());
  }
  auto u = solve_terminal(trace, v, out, s);
  if (!u) throw NoSolutionError("no operand reproduces the trace", trace.events.size());
  return *u;
}

PartialOperand recover_partial_operand(const BranchTrace& trace, const BigInt& v) {
  Solver s;
  const ReplayOutcome out = replay(trace, v, s);
  PartialOperand p;
  std::tie(p.low_bits, p.resolved_bits) = s.resolved();
  p.events_consumed = out.consumed;
  p.peak_candidates = s.peak();
  if (out.clean_end) {
    p.value = solve_terminal(trace, v, out, s);
    if (p.value) {
      p.resolved_bits = bit_length(v);
      p.low_bits = *p.value;
    }
  }
  return p;
}

std::vector<std::size_t> resolved_bits_per_event(const BranchTrace& trace, const BigInt& v) {
  Solver s;
  return replay(trace, v, s).resolved_after;
}

BigInt dsa_key_from_nonce(const SignatureSample& sample, const BigInt& k, const BigInt& n) {
  if (mod(sample.r, n) == 0) throw ParameterError("r is zero modulo n");
  return mod(modinv_ref(mod(sample.r, n), n) * (sample.s * k - sample.h), n);
}

BigInt elgamal_key_from_nonce(const SignatureSample& sample, const BigInt& k, const BigInt& p) {
  const BigInt order = p - 1;
  return mod(modinv_ref(mod(sample.r, order), order) * (sample.h - sample.s * k), order);
}

BigInt ecdsa_blinding_attack(const BlindingTraces& traces, const SignatureSample& sample,
                             const BigInt& n) {
  if (!traces.nonce_inverse) {
    throw ParameterError(traces.blinding_inverse
                             ? "the blinding factor alone does not determine the nonce"
                             : "no inversion trace supplied");
  }
  BigInt k = recover_unknown_operand(*traces.nonce_inverse, n);
  if (traces.blinding_inverse) {
    const BigInt b = recover_unknown_operand(*traces.blinding_inverse, n);
    k = mod(k * modinv_ref(b, n), n);
  }
  return dsa_key_from_nonce(sample, k, n);
}

}  // namespace copycat
