#pragma once

// Instruction-granular page access traces for small straight-line and
// branching programs, next to the coarse page-fault view.

#include <optional>
#include <string>
#include <vector>

#include "copycat/bigint.hpp"

namespace copycat {

struct Instr {
  std::string code_page;
  std::optional<std::string> data_page;
};

// prologue; one of `cases`, picked by secret mod cases.size(); epilogue.
struct ToyProgram {
  std::vector<Instr> prologue;
  std::vector<std::vector<Instr>> cases;
  std::vector<Instr> epilogue;
};

// Balanced if/else on code page P0 calling a function on P1; the call pushes
// to stack page S. Secret 1 takes the if branch, 0 the else branch.
ToyProgram if_else_program();
// Four equal-length cases on one page, each storing to data page D at a
// different position within the case.
ToyProgram switch_program();
ToyProgram straight_line_program();

// One entry per retired instruction: its data page if it touches one,
// otherwise its code page.
std::vector<std::string> simulate_page_trace(const ToyProgram& program, const BigInt& secret);

// What a page-fault observer sees: consecutive repeats collapsed.
std::vector<std::string> page_fault_sequence(const std::vector<std::string>& trace);

}  // namespace copycat
