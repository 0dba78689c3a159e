#include <doctest.h>

#include <set>

#include "copycat/page_sim.hpp"

using namespace copycat;

using Pages = std::vector<std::string>;

TEST_CASE("balanced if/else differs by instruction count only") {
  const ToyProgram p = if_else_program();
  CHECK(simulate_page_trace(p, 1) == Pages{"P0", "P0", "S", "P1"});
  CHECK(simulate_page_trace(p, 0) == Pages{"P0", "P0", "P0", "S", "P1"});
  // The page-fault view cannot tell the branches apart.
  CHECK(page_fault_sequence(simulate_page_trace(p, 0)) == page_fault_sequence(simulate_page_trace(p, 1)));
}

TEST_CASE("switch case is revealed by the data access offset") {
  const ToyProgram p = switch_program();
  std::set<std::size_t> offsets;
  for (int s = 0; s < 4; ++s) {
    const Pages t = simulate_page_trace(p, s);
    CHECK(t.size() == 7);
    std::size_t at = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] == "D") at = i;
    }
    offsets.insert(at);
    CHECK(page_fault_sequence(t).size() == 3);
  }
  CHECK(offsets.size() == 4);
}

TEST_CASE("straight-line code gives the same trace for every secret") {
  const ToyProgram p = straight_line_program();
  const Pages base = simulate_page_trace(p, 0);
  for (int s = 1; s < 50; ++s) CHECK(simulate_page_trace(p, s) == base);
}
