#include "copycat/page_sim.hpp"

#include "copycat/error.hpp"

namespace copycat {

ToyProgram if_else_program() {
  ToyProgram p;
  p.prologue = {{"P0", std::nullopt}};  // test
  // Case 0 (else) needs the extra jump over the if body; case 1 falls through.
  p.cases = {{{"P0", std::nullopt}, {"P0", std::nullopt}},
             {{"P0", std::nullopt}}};
  p.epilogue = {{"P0", "S"}, {"P1", std::nullopt}};  // call pushes, then add
  return p;
}

ToyProgram switch_program() {
  ToyProgram p;
  p.prologue = {{"C", std::nullopt}, {"C", std::nullopt}};
  for (int c = 0; c < 4; ++c) {
    std::vector<Instr> body(4, Instr{"C", std::nullopt});
    body[c].data_page = "D";
    p.cases.push_back(body);
  }
  p.epilogue = {{"C", std::nullopt}};
  return p;
}

ToyProgram straight_line_program() {
  ToyProgram p;
  p.prologue = {{"C", std::nullopt}, {"C", "D"}, {"C", std::nullopt}};
  p.cases = {{}};
  p.epilogue = {{"C", "S"}, {"F", std::nullopt}};
  return p;
}

std::vector<std::string> simulate_page_trace(const ToyProgram& program, const BigInt& secret) {
  if (program.cases.empty()) throw ParameterError("program needs at least one case");
  const BigInt pick = mod(secret, BigInt(static_cast<unsigned long>(program.cases.size())));
  const auto& chosen = program.cases[pick.get_ui()];
  std::vector<std::string> out;
  for (const auto* block : {&program.prologue, &chosen, &program.epilogue}) {
    for (const auto& ins : *block) out.push_back(ins.data_page ? *ins.data_page : ins.code_page);
  }
  return out;
}

std::vector<std::string> page_fault_sequence(const std::vector<std::string>& trace) {
  std::vector<std::string> out;
  for (const auto& page : trace) {
    if (out.empty() || out.back() != page) out.push_back(page);
  }
  return out;
}

}  // namespace copycat
