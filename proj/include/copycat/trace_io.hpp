#pragma once

// Trace files:
//
//   #copycat-trace v1 variant=<id> kind=<branch|weight|step>
//   E <EVENT>     (branch records)
//   W <n>         (weight records)
//   S <n>         (step records)
//
// Any later line starting with '#' is a comment.

#include <istream>
#include <string>

#include "copycat/channel.hpp"
#include "copycat/victims.hpp"

namespace copycat {

enum class TraceKind { Branch, Weight, Step };

struct TraceFile {
  Variant variant = Variant::BeeaFull;
  TraceKind kind = TraceKind::Branch;
  BranchTrace branch;
  WeightTrace weight;
  StepTrace step;
};

std::string format_trace(const BranchTrace& trace);
std::string format_trace(const WeightTrace& trace);
std::string format_trace(const StepTrace& trace);

// ParseError carries the 1-based line number.
TraceFile parse_trace(std::istream& in);
TraceFile read_trace_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace copycat
