#include <doctest.h>

#include <sstream>

#include "copycat/error.hpp"
#include "copycat/trace_io.hpp"

using namespace copycat;

namespace {

TraceFile parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

std::size_t error_line(const std::string& text) {
  try {
    parse_text(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("branch, weight and step traces round trip") {
  const BranchTrace branch = algx_modinv(0x2B, 101).trace;
  const TraceFile b = parse_text(format_trace(branch));
  CHECK(b.kind == TraceKind::Branch);
  CHECK(b.branch == branch);

  const WeightTrace weight = encode_weights(beea_full(17, 1000).trace, default_profile(Variant::BeeaFull));
  const TraceFile w = parse_text(format_trace(weight));
  CHECK(w.kind == TraceKind::Weight);
  CHECK(w.weight == weight);

  const StepTrace step = ecc_mulmod_steps(0b10110, 8);
  const TraceFile s = parse_text(format_trace(step));
  CHECK(s.kind == TraceKind::Step);
  CHECK(s.step == step);

  const BranchTrace empty{Variant::Bgcd, {}};
  CHECK(parse_text(format_trace(empty)).branch == empty);
}

TEST_CASE("comments after the header are ignored") {
  const TraceFile t = parse_text("#copycat-trace v1 variant=euclid kind=branch\n# note\nE DIV_STEP\n");
  CHECK(t.branch.events.size() == 1);
}

TEST_CASE("parse errors carry the line number") {
  CHECK(error_line("") == 1);
  CHECK(error_line("hello\n") == 1);
  CHECK(error_line("#copycat-trace v1 variant=nope kind=branch\n") == 1);
  CHECK(error_line("#copycat-trace v1 variant=euclid kind=blob\n") == 1);
  CHECK(error_line("#copycat-trace v1 variant=euclid kind=branch\nE DIV_STEP\nE NOPE\n") == 3);
  CHECK(error_line("#copycat-trace v1 variant=euclid kind=branch\nE GCD_OO\n") == 2);
  CHECK(error_line("#copycat-trace v1 variant=beea-full kind=weight\nW 3\nW -1\n") == 3);
  CHECK(error_line("#copycat-trace v1 variant=ecc-mulmod kind=step\nW 3\n") == 2);
}
