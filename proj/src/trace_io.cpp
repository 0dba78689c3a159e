#include "copycat/trace_io.hpp"

#include <fstream>
#include <sstream>

#include "copycat/error.hpp"

namespace copycat {
namespace {

constexpr std::string_view kMagic = "#copycat-trace";

std::string header(Variant v, const char* kind) {
  return std::string(kMagic) + " v1 variant=" + std::string(variant_id(v)) + " kind=" + kind + "\n";
}

int parse_count(const std::string& text, std::size_t line_no) {
  if (text.empty() || text.size() > 9) throw ParseError("bad count '" + text + "'", line_no);
  for (char c : text) {
    if (c < '0' || c > '9') throw ParseError("bad count '" + text + "'", line_no);
  }
  return std::stoi(text);
}

}  // namespace

std::string format_trace(const BranchTrace& trace) {
  std::string out = header(trace.variant, "branch");
  for (Event e : trace.events) {
    out += "E ";
    out += event_name(e);
    out += '\n';
  }
  return out;
}

std::string format_trace(const WeightTrace& trace) {
  std::string out = header(trace.variant, "weight");
  for (int w : trace.weights) out += "W " + std::to_string(w) + "\n";
  return out;
}

std::string format_trace(const StepTrace& trace) {
  std::string out = header(Variant::EccMulmod, "step");
  for (int s : trace.steps) out += "S " + std::to_string(s) + "\n";
  return out;
}

TraceFile parse_trace(std::istream& in) {
  TraceFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      std::istringstream h(line);
      std::string magic, version, variant, kind, extra;
      if (!(h >> magic >> version >> variant >> kind) || (h >> extra) || magic != kMagic ||
          version != "v1" || variant.rfind("variant=", 0) != 0 || kind.rfind("kind=", 0) != 0) {
        throw ParseError("missing or malformed trace header", line_no);
      }
      try {
        file.variant = variant_from_id(variant.substr(8));
      } catch (const ParseError&) {
        throw ParseError("unknown variant '" + variant.substr(8) + "'", line_no);
      }
      const std::string k = kind.substr(5);
      if (k == "branch") {
        file.kind = TraceKind::Branch;
      } else if (k == "weight") {
        file.kind = TraceKind::Weight;
      } else if (k == "step") {
        file.kind = TraceKind::Step;
      } else {
        throw ParseError("unknown trace kind '" + k + "'", line_no);
      }
      file.branch.variant = file.variant;
      file.weight.variant = file.variant;
      have_header = true;
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (line.size() < 3 || line[1] != ' ') throw ParseError("malformed record", line_no);
    const char tag = line[0];
    const std::string value = line.substr(2);
    switch (file.kind) {
      case TraceKind::Branch: {
        if (tag != 'E') throw ParseError("expected an E record", line_no);
        Event e;
        try {
          e = event_from_name(value);
        } catch (const ParseError&) {
          throw ParseError("unknown event '" + value + "'", line_no);
        }
        if (!in_alphabet(file.variant, e)) {
          throw ParseError("event '" + value + "' not in variant alphabet", line_no);
        }
        file.branch.events.push_back(e);
        break;
      }
      case TraceKind::Weight:
        if (tag != 'W') throw ParseError("expected a W record", line_no);
        file.weight.weights.push_back(parse_count(value, line_no));
        break;
      case TraceKind::Step:
        if (tag != 'S') throw ParseError("expected an S record", line_no);
        file.step.steps.push_back(parse_count(value, line_no));
        break;
    }
  }
  if (!have_header) throw ParseError("empty trace file", line_no + 1);
  return file;
}

TraceFile read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_trace(in);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace copycat
