#include "copycat/channel.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "copycat/error.hpp"

namespace copycat {
namespace {

using Bodies = std::map<Event, std::vector<int>>;
using Transitions = std::map<std::pair<int, int>, int>;

int idx(Event e) { return static_cast<int>(e); }

std::string node_name(int node, bool source) {
  if (node == kBoundary) return source ? "BEGIN" : "END";
  return std::string(event_name(static_cast<Event>(node)));
}

void connect(Transitions& t, std::initializer_list<Event> from, std::initializer_list<Event> to,
             int w) {
  for (Event f : from) {
    for (Event g : to) t[{idx(f), idx(g)}] = w;
  }
}

void from_begin(Transitions& t, std::initializer_list<Event> to, int w) {
  for (Event g : to) t[{kBoundary, idx(g)}] = w;
}

void to_end(Transitions& t, std::initializer_list<Event> from, int w) {
  for (Event f : from) t[{idx(f), kBoundary}] = w;
}

constexpr auto U_P = Event::U_HALVE_PLAIN;
constexpr auto U_A = Event::U_HALVE_ADJUST;
constexpr auto V_P = Event::V_HALVE_PLAIN;
constexpr auto V_A = Event::V_HALVE_ADJUST;
constexpr auto S1 = Event::CMP_S1;
constexpr auto S2 = Event::CMP_S2;

LayoutProfile full_beea() {
  Bodies b{{U_P, {11, 3}}, {V_P, {11, 3}}, {U_A, {13, 4, 3, 3}}, {V_A, {13, 4, 3, 3}},
           {S1, {5, 4, 4}}, {S2, {5, 4, 4}}};
  Transitions t;
  from_begin(t, {U_P, U_A}, 21);
  from_begin(t, {V_P, V_A}, 23);
  from_begin(t, {S1, S2}, 25);
  connect(t, {U_P, U_A}, {U_P, U_A}, 6);
  connect(t, {U_P, U_A}, {V_P, V_A}, 9);
  connect(t, {U_P, U_A}, {S1, S2}, 10);
  connect(t, {V_P, V_A}, {V_P, V_A}, 6);
  connect(t, {V_P, V_A}, {S1, S2}, 7);
  connect(t, {S1}, {U_P, U_A}, 8);
  connect(t, {S2}, {V_P, V_A}, 13);
  to_end(t, {U_P, U_A, V_P, V_A}, 2);
  to_end(t, {S1}, 12);
  to_end(t, {S2}, 1);
  return LayoutProfile("FULL_BEEA", Variant::BeeaFull, std::move(b), std::move(t));
}

LayoutProfile compact_beea() {
  // The adjusted halving spans two weights (8, 3); the trailing 3 of the
  // listed "8, 3, 3" pattern is the loop continuation U->U / V->V.
  Bodies b{{U_P, {7}}, {V_P, {7}}, {U_A, {8, 3}}, {V_A, {8, 3}}, {S1, {5, 4}}, {S2, {5, 4}}};
  Transitions t;
  from_begin(t, {U_P, U_A}, 21);
  from_begin(t, {V_P, V_A}, 23);
  from_begin(t, {S1, S2}, 25);
  connect(t, {U_P, U_A}, {U_P, U_A}, 3);
  connect(t, {U_P, U_A}, {V_P, V_A}, 9);
  connect(t, {U_P, U_A}, {S1, S2}, 10);
  connect(t, {V_P, V_A}, {V_P, V_A}, 3);
  connect(t, {V_P, V_A}, {S1, S2}, 6);
  connect(t, {S1}, {U_P, U_A}, 8);
  connect(t, {S2}, {V_P, V_A}, 13);
  to_end(t, {U_P, U_A, V_P, V_A}, 2);
  to_end(t, {S1}, 12);
  to_end(t, {S2}, 1);
  return LayoutProfile("COMPACT_BEEA", Variant::BeeaCompact, std::move(b), std::move(t));
}

LayoutProfile algx() {
  constexpr auto IO = Event::INIT_U_ODD, IE = Event::INIT_U_EVEN;
  constexpr auto HP = Event::T3_HALVE_PLAIN, HA = Event::T3_HALVE_ADJUST;
  constexpr auto POS = Event::T3_POS, NEG = Event::T3_NEG;
  constexpr auto T1N = Event::T1_NONNEG, T1A = Event::T1_NEG_ADJUST;
  Bodies b{{IO, {1, 1}},     {IE, {1, 1}},  {HP, {4, 2}},  {HA, {6, 3, 4, 2}},
           {POS, {3, 3}},    {NEG, {5, 6}}, {T1N, {2, 2}}, {T1A, {2, 2, 7, 3}}};
  Transitions t;
  from_begin(t, {IO}, 31);
  from_begin(t, {IE}, 30);
  connect(t, {IO, IE}, {HP, HA}, 9);
  connect(t, {IO, IE}, {POS, NEG}, 11);
  connect(t, {HP, HA}, {HP, HA}, 5);
  connect(t, {HP, HA}, {POS, NEG}, 7);
  connect(t, {POS, NEG}, {T1N, T1A}, 4);
  connect(t, {T1N, T1A}, {HP, HA}, 10);
  connect(t, {T1N, T1A}, {POS, NEG}, 12);
  to_end(t, {T1N, T1A}, 14);
  return LayoutProfile("ALGX", Variant::AlgX, std::move(b), std::move(t));
}

LayoutProfile bgcd() {
  constexpr auto SW = Event::GCD_SWAP, NS = Event::GCD_NOSWAP;
  constexpr auto OO = Event::GCD_OO, OE = Event::GCD_OE, EO = Event::GCD_EO, EE = Event::GCD_EE;
  Bodies b{{SW, {1}}, {NS, {}}, {OO, {3}}, {OE, {}}, {EO, {}}, {EE, {2}}};
  Transitions t;
  from_begin(t, {SW}, 20);
  from_begin(t, {NS}, 21);
  connect(t, {SW, NS, EE}, {OO}, 6);
  connect(t, {SW, NS, EE}, {OE}, 8);
  connect(t, {SW, NS, EE}, {EO}, 10);
  connect(t, {SW, NS, EE}, {EE}, 12);
  connect(t, {OO, OE, EO}, {SW}, 4);
  connect(t, {OO, OE, EO}, {NS}, 5);
  to_end(t, {SW}, 15);
  to_end(t, {NS}, 16);
  to_end(t, {EE}, 17);
  return LayoutProfile("BGCD", Variant::Bgcd, std::move(b), std::move(t));
}

LayoutProfile euclid() {
  constexpr auto D = Event::DIV_STEP;
  Bodies b{{D, {9}}};
  Transitions t;
  from_begin(t, {D}, 20);
  connect(t, {D}, {D}, 6);
  to_end(t, {D}, 3);
  return LayoutProfile("EUCLID", Variant::Euclid, std::move(b), std::move(t));
}

std::vector<int> pattern_of(const LayoutProfile& p, int from, Event e) {
  std::vector<int> out{*p.transition(from, idx(e))};
  const auto& body = p.bodies().at(e);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

bool contains(const std::vector<int>& v, int w) { return std::find(v.begin(), v.end(), w) != v.end(); }

enum class Match { Yes, No, NeedMore };

// Outcome of trying `e` from state `from` at weight offset `pos`.
Match try_event(const LayoutProfile& p, const std::vector<int>& w, std::size_t pos, int from,
                Event e, bool complete, std::size_t& consumed) {
  const auto pat = pattern_of(p, from, e);
  for (std::size_t j = 0; j < pat.size(); ++j) {
    if (pos + j >= w.size()) return Match::NeedMore;
    if (w[pos + j] != pat[j]) return Match::No;
  }
  const std::size_t next = pos + pat.size();
  consumed = pat.size();
  if (next >= w.size()) return complete ? Match::No : Match::NeedMore;
  const int look = w[next];
  if (complete && next + 1 == w.size()) {
    const auto exit = p.transition(idx(e), kBoundary);
    return exit && *exit == look ? Match::Yes : Match::No;
  }
  if (complete) {
    for (Event f : p.successors(idx(e))) {
      if (*p.transition(idx(e), idx(f)) == look) return Match::Yes;
    }
    return Match::No;
  }
  return contains(p.lookahead(e), look) ? Match::Yes : Match::No;
}

BranchTrace decode_impl(const WeightTrace& trace, const LayoutProfile& profile, bool complete) {
  if (trace.variant != profile.variant()) {
    throw DecodeError("trace variant does not match profile " + profile.name(), 0);
  }
  BranchTrace out;
  out.variant = trace.variant;
  const auto& w = trace.weights;
  if (w.empty()) return out;
  std::size_t pos = 0;
  int state = kBoundary;
  for (;;) {
    if (complete && pos + 1 == w.size() && state != kBoundary) {
      if (profile.transition(state, kBoundary) == w[pos]) return out;
      throw DecodeError("bad exit weight", pos);
    }
    std::optional<Event> found;
    std::size_t found_len = 0;
    bool undecided = false;
    for (Event e : profile.successors(state)) {
      std::size_t len = 0;
      const Match m = try_event(profile, w, pos, state, e, complete, len);
      if (m == Match::NeedMore) {
        undecided = true;
      } else if (m == Match::Yes) {
        if (found) throw DecodeError("ambiguous weights", pos);
        found = e;
        found_len = len;
      }
    }
    if (!complete && undecided) return out;
    if (!found) {
      if (!complete && pos < w.size() && state != kBoundary &&
          profile.transition(state, kBoundary) == w[pos] && pos + 1 == w.size()) {
        return out;
      }
      throw DecodeError("no event matches", pos);
    }
    out.events.push_back(*found);
    pos += found_len;
    state = idx(*found);
    if (!complete && pos >= w.size()) return out;
  }
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

LayoutProfile::LayoutProfile(std::string name, Variant variant, Bodies bodies, Transitions transitions)
    : name_(std::move(name)), variant_(variant), bodies_(std::move(bodies)),
      transitions_(std::move(transitions)) {
  for (const auto& [edge, weight] : transitions_) {
    if (weight <= 0) throw ParameterError(name_ + ": weights must be positive");
    if (edge.second != kBoundary) successors_[edge.first].push_back(static_cast<Event>(edge.second));
  }
  for (const auto& [e, body] : bodies_) {
    if (!in_alphabet(variant_, e)) {
      throw ParameterError(name_ + ": event " + std::string(event_name(e)) + " not in variant alphabet");
    }
    for (int x : body) {
      if (x <= 0) throw ParameterError(name_ + ": weights must be positive");
    }
    auto& look = lookahead_[e];
    for (Event f : successors_[idx(e)]) look.push_back(*transition(idx(e), idx(f)));
    if (auto exit = transition(idx(e), kBoundary)) look.push_back(*exit);
  }
  for (auto& [from, list] : successors_) {
    for (Event e : list) {
      if (!bodies_.count(e)) {
        throw ParameterError(name_ + ": no body for " + std::string(event_name(e)));
      }
    }
    (void)from;
  }
  validate();
}

std::optional<int> LayoutProfile::transition(int from, int to) const {
  const auto it = transitions_.find({from, to});
  if (it == transitions_.end()) return std::nullopt;
  return it->second;
}

const std::vector<Event>& LayoutProfile::successors(int from) const {
  static const std::vector<Event> kNone;
  const auto it = successors_.find(from);
  return it == successors_.end() ? kNone : it->second;
}

const std::vector<int>& LayoutProfile::lookahead(Event e) const {
  static const std::vector<int> kNone;
  const auto it = lookahead_.find(e);
  return it == lookahead_.end() ? kNone : it->second;
}

void LayoutProfile::validate() const {
  // For every state, the candidate patterns plus one weight of lookahead must
  // single out the event.
  for (const auto& [from, list] : successors_) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = 0; j < list.size(); ++j) {
        if (i == j) continue;
        const Event a = list[i];
        const Event b = list[j];
        const auto pa = pattern_of(*this, from, a);
        const auto pb = pattern_of(*this, from, b);
        if (pa.size() > pb.size() || !std::equal(pa.begin(), pa.end(), pb.begin())) continue;
        const std::string where = name_ + ": " + std::string(event_name(a)) + " vs " +
                                  std::string(event_name(b)) + " after " + node_name(from, true);
        if (pa.size() == pb.size()) {
          if (i > j) continue;
          for (int w : lookahead(a)) {
            if (contains(lookahead(b), w)) throw ParameterError(where + " share pattern and lookahead");
          }
        } else if (contains(lookahead(a), pb[pa.size()])) {
          throw ParameterError(where + ": prefix pattern with colliding lookahead");
        }
      }
    }
  }
}

LayoutProfile preset_profile(const std::string& name) {
  if (name == "FULL_BEEA") return full_beea();
  if (name == "COMPACT_BEEA") return compact_beea();
  if (name == "ALGX") return algx();
  if (name == "BGCD") return bgcd();
  if (name == "EUCLID") return euclid();
  throw ParameterError("unknown profile preset: " + name);
}

std::vector<std::string> preset_names() {
  return {"FULL_BEEA", "COMPACT_BEEA", "ALGX", "BGCD", "EUCLID"};
}

LayoutProfile default_profile(Variant variant) {
  switch (variant) {
    case Variant::BeeaFull: return full_beea();
    case Variant::BeeaCompact: return compact_beea();
    case Variant::AlgX: return algx();
    case Variant::Bgcd: return bgcd();
    case Variant::Euclid: return euclid();
    case Variant::EccMulmod: break;
  }
  throw ParameterError("variant has a step channel, not a weight profile");
}

LayoutProfile load_profile(const std::string& name_or_path) {
  for (const auto& name : preset_names()) {
    if (name == name_or_path) return preset_profile(name);
  }
  std::ifstream in(name_or_path);
  if (!in) throw ParameterError("profile is neither a preset nor a readable file: " + name_or_path);
  return parse_profile(in);
}

LayoutProfile parse_profile(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::string> name;
  std::optional<Variant> variant;
  Bodies bodies;
  Transitions transitions;
  auto node = [&](const std::string& token, bool source) -> int {
    if (token == (source ? "BEGIN" : "END")) return kBoundary;
    try {
      return idx(event_from_name(token));
    } catch (const ParseError&) {
      throw ParseError("unknown node '" + token + "'", line_no);
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind == "profile") {
      std::string n, v;
      if (!(fields >> n >> v) || v.rfind("variant=", 0) != 0) {
        throw ParseError("expected 'profile <name> variant=<id>'", line_no);
      }
      name = n;
      try {
        variant = variant_from_id(v.substr(8));
      } catch (const ParseError&) {
        throw ParseError("unknown variant '" + v.substr(8) + "'", line_no);
      }
    } else if (kind == "body") {
      std::string ev;
      if (!(fields >> ev)) throw ParseError("expected 'body <EVENT> <w>...'", line_no);
      const Event e = static_cast<Event>(node(ev, true));
      std::vector<int> ws;
      int x;
      while (fields >> x) ws.push_back(x);
      if (!fields.eof()) throw ParseError("bad weight", line_no);
      bodies[e] = ws;
    } else if (kind == "trans") {
      std::string a, b;
      int x;
      if (!(fields >> a >> b >> x)) throw ParseError("expected 'trans <from> <to> <w>'", line_no);
      transitions[{node(a, true), node(b, false)}] = x;
    } else {
      throw ParseError("unknown directive '" + kind + "'", line_no);
    }
  }
  if (!name || !variant) throw ParseError("missing profile header", line_no);
  return LayoutProfile(*name, *variant, std::move(bodies), std::move(transitions));
}

std::string format_profile(const LayoutProfile& profile) {
  std::ostringstream out;
  out << "profile " << profile.name() << " variant=" << variant_id(profile.variant()) << '\n';
  for (const auto& [e, body] : profile.bodies()) {
    out << "body " << event_name(e);
    for (int w : body) out << ' ' << w;
    out << '\n';
  }
  for (const auto& [edge, w] : profile.transitions()) {
    out << "trans " << node_name(edge.first, true) << ' ' << node_name(edge.second, false) << ' '
        << w << '\n';
  }
  return out.str();
}

WeightTrace encode_weights(const BranchTrace& trace, const LayoutProfile& profile) {
  if (trace.variant != profile.variant()) {
    throw EncodeError("trace variant does not match profile " + profile.name());
  }
  WeightTrace out;
  out.variant = trace.variant;
  if (trace.events.empty()) return out;
  int prev = kBoundary;
  auto edge = [&](int from, int to) {
    const auto w = profile.transition(from, to);
    if (!w) {
      throw EncodeError(profile.name() + " has no transition " + node_name(from, true) + " -> " +
                        node_name(to, false));
    }
    out.weights.push_back(*w);
  };
  for (Event e : trace.events) {
    edge(prev, idx(e));
    const auto it = profile.bodies().find(e);
    if (it == profile.bodies().end()) {
      throw EncodeError(profile.name() + " has no body for " + std::string(event_name(e)));
    }
    out.weights.insert(out.weights.end(), it->second.begin(), it->second.end());
    prev = idx(e);
  }
  edge(prev, kBoundary);
  return out;
}

BranchTrace decode_weights(const WeightTrace& trace, const LayoutProfile& profile) {
  return decode_impl(trace, profile, true);
}

BranchTrace decode_weights_prefix(const WeightTrace& trace, const LayoutProfile& profile) {
  return decode_impl(trace, profile, false);
}

int decode_steps(const StepTrace& trace) { return decode_steps_prefix(trace, trace.steps.size()); }

int decode_steps_prefix(const StepTrace& trace, std::size_t observed) {
  observed = std::min(observed, trace.steps.size());
  int zeros = 0;
  bool real_seen = false;
  for (std::size_t i = 0; i < observed; ++i) {
    const int s = trace.steps[i];
    if (s == kDummyStepCount) {
      if (real_seen) throw DecodeError("dummy step after a real step", i);
      ++zeros;
    } else if (s == kRealStepCount) {
      real_seen = true;
    } else {
      throw DecodeError("step count " + std::to_string(s) + " is neither dummy nor real", i);
    }
  }
  return zeros;
}

WeightTrace perturb_weights(const WeightTrace& trace, double rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  WeightTrace out = trace;
  for (int& w : out.weights) {
    if (coin(rng) >= rate) continue;
    w += (rng() & 1) ? 1 : (w > 1 ? -1 : 1);
  }
  return out;
}

}  // namespace copycat
