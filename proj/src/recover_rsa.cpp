#include "copycat/recover_rsa.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "copycat/error.hpp"

namespace copycat {
namespace {

bool is_u_halve(Event e) { return e == Event::U_HALVE_PLAIN || e == Event::U_HALVE_ADJUST; }
bool is_v_halve(Event e) { return e == Event::V_HALVE_PLAIN || e == Event::V_HALVE_ADJUST; }
bool is_cmp(Event e) { return e == Event::CMP_S1 || e == Event::CMP_S2; }

// Outcome of checking one parity against the trace.
enum class Check { Ok, Mismatch, Unknown };

Check expect_parity(const PartialInt& x, int parity) {
  const auto p = x.parity();
  if (!p) return Check::Unknown;
  return *p == parity ? Check::Ok : Check::Mismatch;
}

// (a odd || b odd) == any_odd, deciding with as few known bits as possible.
Check expect_any_odd(const PartialInt& a, const PartialInt& b, bool any_odd) {
  const auto pa = a.parity();
  const auto pb = b.parity();
  if ((pa && *pa == 1) || (pb && *pb == 1)) return any_odd ? Check::Ok : Check::Mismatch;
  if (pa && pb) return any_odd ? Check::Mismatch : Check::Ok;
  return Check::Unknown;
}

// Walks a replay; `verdict` folds each check into the outcome and reports
// whether the walk may continue.
struct Walk {
  TestOutcome out;
  bool stop = false;

  bool fold(Check c) {
    if (c == Check::Mismatch) out.contradiction = true;
    if (c != Check::Ok) stop = true;
    return !stop;
  }
};

std::size_t known_v2(const BigInt& x, std::size_t bits) {
  const BigInt r = low_bits(x, bits);
  return r == 0 ? bits : std::min(bits, trailing_zeros(r));
}

// lambda = (p-1)(q-1) / 2^i, as far as p_s, q_s (mod 2^bits) determine it.
// nullopt when the known bits of phi already rule out 2^i | phi.
std::optional<PartialInt> lambda_candidate(const BigInt& p_s, const BigInt& q_s, std::size_t bits,
                                           int i) {
  // p - 1 = (p_s - 1) + 2^bits * a; since p_s - 1 has at least t_p known
  // trailing zeros, the product is fixed mod 2^(bits + min(t_p, t_q)).
  const std::size_t tp = known_v2(p_s - 1, bits);
  const std::size_t tq = known_v2(q_s - 1, bits);
  const std::size_t phi_bits = bits + std::min(tp, tq);
  const BigInt phi = low_bits((p_s - 1) * (q_s - 1), phi_bits);
  const std::size_t ii = static_cast<std::size_t>(i);
  if (low_bits(phi, std::min(ii, phi_bits)) != 0) return std::nullopt;
  if (phi_bits <= ii) return PartialInt::low(0, 0);
  return PartialInt::low(phi >> ii, phi_bits - ii);
}

using Scorer = std::function<std::optional<std::size_t>(const Hypothesis&)>;

struct QueueOrder {
  bool operator()(const Hypothesis& a, const Hypothesis& b) const {
    if (a.steps != b.steps) return a.steps < b.steps;
    if (a.b != b.b) return a.b < b.b;
    return a.seq > b.seq;
  }
};

struct SearchSpec {
  BigInt n;
  bool expand_r = false;
  Scorer score;  // nullopt prunes
  std::vector<Hypothesis> seeds;
  // Truth test for instrumentation (may be empty): bit 0 when the hypothesis
  // matches (p, q), bit 1 when it matches (q, p). The searches that do not
  // distinguish the factors may follow either orientation.
  std::function<int(const Hypothesis&)> is_truth;
};

Factorization run_search(const SearchSpec& spec, const SearchOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Factorization result;
  SearchStats& st = result.stats;
  std::priority_queue<Hypothesis, std::vector<Hypothesis>, QueueOrder> queue;
  std::uint64_t seq = 0;
  const std::size_t n_bits = bit_length(spec.n);

  // An orientation, once pruned, has no descendants left; the truth is lost
  // when both are gone.
  int pruned_orientations = 0;
  auto offer = [&](Hypothesis h) {
    const int truth = spec.is_truth ? spec.is_truth(h) : 0;
    const auto steps = spec.score(h);
    if (!steps) {
      pruned_orientations |= truth;
      if (pruned_orientations == 3) st.truth_pruned = true;
      return;
    }
    h.steps = *steps;
    h.seq = seq++;
    st.max_verified = std::max(st.max_verified, h.steps);
    queue.push(std::move(h));
    ++st.pushed;
    st.peak_queue = std::max(st.peak_queue, queue.size());
  };
  for (const auto& s : spec.seeds) offer(s);

  while (!queue.empty()) {
    Hypothesis h = queue.top();
    queue.pop();
    if (options.check_invariants && low_bits(h.p_s * h.q_s - spec.n, h.b) != 0) {
      throw std::logic_error("hypothesis violates p_s q_s = N mod 2^b");
    }
    if (spec.is_truth && spec.is_truth(h) != 0) st.truth_depth = std::max(st.truth_depth, h.b);
    if (h.p_s > 1 && h.q_s > 1 && h.p_s * h.q_s == spec.n) {
      BigInt p = h.p_s, q = h.q_s;
      if (p < q) std::swap(p, q);
      result.factors = std::make_pair(p, q);
      result.i = h.i;
      if (spec.expand_r) result.r = h.r_s;
      break;
    }
    if (h.b > n_bits) continue;
    if (options.max_expansions && st.expanded >= options.max_expansions) break;
    ++st.expanded;
    const BigInt step = pow2(h.b);
    const BigInt target = low_bits(spec.n, h.b + 1);
    for (int bit_p = 0; bit_p < 2; ++bit_p) {
      for (int bit_q = 0; bit_q < 2; ++bit_q) {
        const BigInt p = bit_p ? h.p_s + step : h.p_s;
        const BigInt q = bit_q ? h.q_s + step : h.q_s;
        const BigInt pq = p * q;
        if (low_bits(pq, h.b + 1) != target || pq > spec.n) continue;
        for (int bit_r = 0; bit_r < (spec.expand_r ? 2 : 1); ++bit_r) {
          Hypothesis child;
          child.b = h.b + 1;
          child.p_s = p;
          child.q_s = q;
          child.r_s = bit_r ? h.r_s + step : h.r_s;
          child.i = h.i;
          offer(std::move(child));
        }
      }
    }
  }
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::function<int(const Hypothesis&)> truth_test(const SearchOptions& options, bool with_r,
                                                 std::optional<int> truth_i) {
  if (!options.truth) return nullptr;
  const auto [p, q] = *options.truth;
  const std::optional<BigInt> r = options.truth_r;
  return [p, q, r, with_r, truth_i](const Hypothesis& h) {
    if (truth_i && h.i != *truth_i) return 0;
    if (with_r && (!r || low_bits(*r, h.b) != h.r_s)) return 0;
    const BigInt pl = low_bits(p, h.b), ql = low_bits(q, h.b);
    return (pl == h.p_s && ql == h.q_s ? 1 : 0) | (ql == h.p_s && pl == h.q_s ? 2 : 0);
  };
}

// Required corroboration for a hypothesis whose deciding value is known to
// `bits` bits: at least one event per known bit.
bool enough(std::size_t verified, std::size_t bits) { return verified >= bits; }

}  // namespace

TestOutcome replay_beea_partial(const BranchTrace& trace, const PartialInt& x, const PartialInt& y) {
  Walk w;
  const auto& ev = trace.events;
  PartialInt u = x, v = y;
  PartialInt a = PartialInt::exact(1), b = PartialInt::exact(0);
  PartialInt c = PartialInt::exact(0), d = PartialInt::exact(1);
  std::size_t pos = 0;
  bool last_s1 = false;
  while (pos < ev.size()) {
    while (pos < ev.size() && is_u_halve(ev[pos])) {
      const bool adjust = ev[pos] == Event::U_HALVE_ADJUST;
      if (!w.fold(expect_parity(u, 0)) || !w.fold(expect_any_odd(a, b, adjust))) return w.out;
      u = u.halved();
      if (adjust) {
        a = a + y;
        b = b - x;
      }
      a = a.halved();
      b = b.halved();
      ++pos;
      ++w.out.verified;
    }
    if (pos == ev.size()) break;
    if (!is_v_halve(ev[pos]) && !is_cmp(ev[pos])) {
      w.out.contradiction = true;
      return w.out;
    }
    if (!w.fold(expect_parity(u, 1))) return w.out;
    while (pos < ev.size() && is_v_halve(ev[pos])) {
      const bool adjust = ev[pos] == Event::V_HALVE_ADJUST;
      if (!w.fold(expect_parity(v, 0)) || !w.fold(expect_any_odd(c, d, adjust))) return w.out;
      v = v.halved();
      if (adjust) {
        c = c + y;
        d = d - x;
      }
      c = c.halved();
      d = d.halved();
      ++pos;
      ++w.out.verified;
    }
    if (pos == ev.size()) break;
    if (!is_cmp(ev[pos])) {
      w.out.contradiction = true;
      return w.out;
    }
    if (!w.fold(expect_parity(v, 1))) return w.out;
    last_s1 = ev[pos] == Event::CMP_S1;
    if (last_s1) {
      u = u - v;
      a = a - c;
      b = b - d;
    } else {
      v = v - u;
      c = c - a;
      d = d - b;
    }
    ++pos;
    ++w.out.verified;
  }
  // A complete trace stops right after u reaches 0, leaving gcd = v = 1.
  if (ev.empty() || !last_s1 || !u.consistent_with(0) || !v.consistent_with(1)) {
    w.out.contradiction = true;
    return w.out;
  }
  w.out.complete = true;
  return w.out;
}

TestOutcome replay_bgcd_partial(const BranchTrace& trace, const PartialInt& a_in,
                                const PartialInt& b_in) {
  Walk w;
  const auto& ev = trace.events;
  PartialInt a = a_in, b = b_in;
  std::size_t pos = 0;
  auto swap_event = [&]() -> bool {
    if (pos == ev.size()) return false;
    if (ev[pos] == Event::GCD_SWAP) {
      std::swap(a, b);
    } else if (ev[pos] != Event::GCD_NOSWAP) {
      w.out.contradiction = true;
      return false;
    }
    ++pos;
    ++w.out.verified;
    return true;
  };
  if (!swap_event()) {
    if (ev.empty()) w.out.contradiction = true;
    return w.out;
  }
  while (pos < ev.size()) {
    const Event e = ev[pos];
    int pa, pb;
    switch (e) {
      case Event::GCD_OO: pa = 1; pb = 1; break;
      case Event::GCD_OE: pa = 1; pb = 0; break;
      case Event::GCD_EO: pa = 0; pb = 1; break;
      case Event::GCD_EE: pa = 0; pb = 0; break;
      default:
        w.out.contradiction = true;
        return w.out;
    }
    if (!w.fold(expect_parity(a, pa)) || !w.fold(expect_parity(b, pb))) return w.out;
    switch (e) {
      case Event::GCD_OO: a = (a - b).halved(); break;
      case Event::GCD_OE: b = b.halved(); break;
      case Event::GCD_EO: a = a.halved(); break;
      default:
        a = a.halved();
        b = b.halved();
        break;
    }
    ++pos;
    ++w.out.verified;
    if (e != Event::GCD_EE && !swap_event()) {
      if (w.out.contradiction) return w.out;
      if (pos == ev.size()) {
        w.out.contradiction = true;  // a parity step is always followed by a swap check
      }
      return w.out;
    }
  }
  // The loop ends with b = 0; gcd = a * 2^s is unknown, so nothing else to check.
  if (!b.consistent_with(0)) {
    w.out.contradiction = true;
    return w.out;
  }
  w.out.complete = true;
  return w.out;
}

TestOutcome test_t(const BranchTrace& trace, const BigInt& p_s, const BigInt& q_s, std::size_t bits) {
  return replay_beea_partial(trace, PartialInt::low(q_s, bits), PartialInt::low(p_s, bits));
}

TestOutcome test_t_lambda(const BranchTrace& trace, const BigInt& lambda_s, std::size_t bits,
                          const BigInt& e) {
  return replay_beea_partial(trace, PartialInt::exact(e), PartialInt::low(lambda_s, bits));
}

TestOutcome test_t_gcd(const BranchTrace& trace, const BigInt& p_s, const BigInt& q_s,
                       std::size_t bits) {
  return replay_bgcd_partial(trace, PartialInt::low(p_s - 1, bits), PartialInt::low(q_s - 1, bits));
}

Factorization recover_pq_from_crt_trace(const BranchTrace& trace, const BigInt& n,
                                        const SearchOptions& options) {
  if (trace.variant != Variant::BeeaFull) throw ParameterError("expected a beea-full trace");
  SearchSpec spec;
  spec.n = n;
  spec.score = [&trace](const Hypothesis& h) -> std::optional<std::size_t> {
    const TestOutcome t = test_t(trace, h.p_s, h.q_s, h.b);
    if (t.contradiction || !enough(t.verified, h.b)) return std::nullopt;
    return t.verified;
  };
  Hypothesis seed;
  seed.b = 1;
  seed.p_s = 1;
  seed.q_s = 1;
  spec.seeds.push_back(seed);
  spec.is_truth = truth_test(options, false, std::nullopt);
  Factorization f = run_search(spec, options);
  if (!f.factors) throw NotFoundError("no factorisation consistent with the trace");
  return f;
}

namespace {

Factorization lambda_search(const BranchTrace& trace_b, const std::optional<BranchTrace>& trace_gcd,
                            const std::optional<BigInt>& e_r, const BigInt& e, const BigInt& n,
                            int l_max, const SearchOptions& options) {
  if (trace_b.variant != Variant::BeeaFull) throw ParameterError("expected a beea-full trace");
  if (trace_gcd && trace_gcd->variant != Variant::Bgcd) throw ParameterError("expected a bgcd trace");
  if (l_max < 1) throw ParameterError("l_max must be at least 1");
  const bool joint = !e_r.has_value();
  SearchSpec spec;
  spec.n = n;
  spec.expand_r = joint;
  spec.score = [&](const Hypothesis& h) -> std::optional<std::size_t> {
    const auto lambda = lambda_candidate(h.p_s, h.q_s, h.b, h.i);
    if (!lambda) return std::nullopt;
    const std::size_t bits = lambda->precision();
    if (!joint) {
      const TestOutcome t = replay_beea_partial(trace_b, PartialInt::exact(*e_r), *lambda);
      if (t.contradiction || !enough(t.verified, bits)) return std::nullopt;
      return t.verified;
    }
    const PartialInt r = PartialInt::low(h.r_s, h.b);
    const TestOutcome tb = replay_beea_partial(trace_b, PartialInt::low(e * h.r_s, h.b), *lambda);
    if (tb.contradiction) return std::nullopt;
    const TestOutcome tg = replay_bgcd_partial(*trace_gcd, r, *lambda);
    if (tg.contradiction) return std::nullopt;
    const std::size_t total = tb.verified + tg.verified;
    if (!enough(total, std::min(bits, h.b))) return std::nullopt;
    return total;
  };
  for (int i = 1; i <= l_max; ++i) {
    Hypothesis seed;
    seed.b = 1;
    seed.p_s = 1;
    seed.q_s = 1;
    seed.r_s = 1;  // gcd(r, lambda) = 1 with lambda even forces r odd
    seed.i = i;
    spec.seeds.push_back(seed);
  }
  std::optional<int> truth_i;
  if (options.truth) {
    const BigInt g = gcd(options.truth->first - 1, options.truth->second - 1);
    const std::size_t t = trailing_zeros(g);
    if (g == pow2(t) && t <= static_cast<std::size_t>(l_max)) truth_i = static_cast<int>(t);
  }
  if (!options.truth || truth_i) spec.is_truth = truth_test(options, joint, truth_i);
  return run_search(spec, options);
}

}  // namespace

Factorization recover_pq_from_d_trace(const BranchTrace& trace, const BigInt& e, const BigInt& n,
                                      int l_max, const SearchOptions& options) {
  return lambda_search(trace, std::nullopt, e, e, n, l_max, options);
}

Factorization recover_pq_from_gcd_trace(const BranchTrace& trace, const BigInt& n,
                                        const SearchOptions& options) {
  if (trace.variant != Variant::Bgcd) throw ParameterError("expected a bgcd trace");
  SearchSpec spec;
  spec.n = n;
  spec.score = [&trace](const Hypothesis& h) -> std::optional<std::size_t> {
    const TestOutcome t = test_t_gcd(trace, h.p_s, h.q_s, h.b);
    if (t.contradiction || !enough(t.verified, h.b)) return std::nullopt;
    return t.verified;
  };
  Hypothesis seed;
  seed.b = 1;
  seed.p_s = 1;
  seed.q_s = 1;
  spec.seeds.push_back(seed);
  spec.is_truth = truth_test(options, false, std::nullopt);
  Factorization f = run_search(spec, options);
  if (!f.factors) throw NotFoundError("no factorisation consistent with the trace");
  return f;
}

Factorization masked_d_attack(const BranchTrace& trace_b, const std::optional<BranchTrace>& trace_gcd,
                              const BigInt& e, const std::optional<BigInt>& r, const BigInt& n,
                              int l_max, const SearchOptions& options) {
  if (r) return lambda_search(trace_b, std::nullopt, BigInt(e * *r), e, n, l_max, options);
  if (!trace_gcd) throw ParameterError("r is unknown and no gcd(r, lambda) trace was supplied");
  return lambda_search(trace_b, trace_gcd, std::nullopt, e, n, l_max, options);
}

std::string format_report(const Factorization& f) {
  std::ostringstream out;
  out << "found=" << (f.factors ? 1 : 0) << '\n';
  if (f.factors) {
    out << "p=" << to_decimal(f.factors->first) << '\n';
    out << "q=" << to_decimal(f.factors->second) << '\n';
    out << "i=" << f.i << '\n';
    if (f.r) out << "r=" << to_decimal(*f.r) << '\n';
  }
  out << "expanded=" << f.stats.expanded << '\n';
  out << "pushed=" << f.stats.pushed << '\n';
  out << "peak_queue=" << f.stats.peak_queue << '\n';
  out << "max_verified=" << f.stats.max_verified << '\n';
  out << "seconds=" << f.stats.seconds << '\n';
  return out.str();
}

}  // namespace copycat
