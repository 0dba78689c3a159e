#pragma once

// Simulated instruction-count channel. A LayoutProfile fixes how many
// instructions retire between consecutive accesses to the watched page for
// every branch event, which turns a BranchTrace into a WeightTrace and back.

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "copycat/victims.hpp"

namespace copycat {

// Pseudo-event used as "trace start" in a transition's source and as "trace
// end" in its destination.
inline constexpr int kBoundary = -1;

// Weights for one victim variant. An event contributes
//   transitions[(prev, event)]  then  bodies[event]
// and the trace is closed by transitions[(last, kBoundary)]. The transition
// weight is the count leading into the event's first page access; the body
// lists the counts between that access and the event's remaining accesses.
class LayoutProfile {
 public:
  LayoutProfile(std::string name, Variant variant, std::map<Event, std::vector<int>> bodies,
                std::map<std::pair<int, int>, int> transitions);

  const std::string& name() const { return name_; }
  Variant variant() const { return variant_; }
  const std::map<Event, std::vector<int>>& bodies() const { return bodies_; }
  const std::map<std::pair<int, int>, int>& transitions() const { return transitions_; }

  std::optional<int> transition(int from, int to) const;
  // Events reachable from `from`, in enum order.
  const std::vector<Event>& successors(int from) const;
  // All weights that may follow the body of `e`: its outgoing transitions and
  // its exit weight.
  const std::vector<int>& lookahead(Event e) const;

 private:
  void validate() const;

  std::string name_;
  Variant variant_;
  std::map<Event, std::vector<int>> bodies_;
  std::map<std::pair<int, int>, int> transitions_;
  std::map<int, std::vector<Event>> successors_;
  std::map<Event, std::vector<int>> lookahead_;
};

// FULL_BEEA, COMPACT_BEEA, ALGX, BGCD, EUCLID.
LayoutProfile preset_profile(const std::string& name);
LayoutProfile default_profile(Variant variant);
std::vector<std::string> preset_names();

// Text form:
//   profile <name> variant=<id>
//   body <EVENT> <w>...
//   trans <EVENT|BEGIN> <EVENT|END> <w>
LayoutProfile parse_profile(std::istream& in);
// A preset name, or the path of a profile file. ParameterError when neither
// applies; ParseError for a malformed file.
LayoutProfile load_profile(const std::string& name_or_path);
std::string format_profile(const LayoutProfile& profile);

struct WeightTrace {
  Variant variant = Variant::BeeaFull;
  std::vector<int> weights;

  bool operator==(const WeightTrace& other) const = default;
};

WeightTrace encode_weights(const BranchTrace& trace, const LayoutProfile& profile);
// Decodes a complete trace; DecodeError carries the weight offset of the
// first event that cannot be identified uniquely.
BranchTrace decode_weights(const WeightTrace& trace, const LayoutProfile& profile);
// Decodes the longest prefix whose events are already determined by the
// weights seen so far.
BranchTrace decode_weights_prefix(const WeightTrace& trace, const LayoutProfile& profile);

// Number of leading dummy iterations; DecodeError if a 49 follows a 46 or an
// entry is neither.
int decode_steps(const StepTrace& trace);
// Same, from the first `observed` entries only; the result is exact when it
// is smaller than `observed`.
int decode_steps_prefix(const StepTrace& trace, std::size_t observed);

// Robustness hook: each weight is moved by +-1 with probability `rate`.
// Acceptance runs never call it.
WeightTrace perturb_weights(const WeightTrace& trace, double rate, std::uint64_t seed);

}  // namespace copycat
