#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "copycat/channel.hpp"
#include "copycat/error.hpp"

using namespace copycat;

namespace {

// A random victim trace in the variant the profile models.
BranchTrace random_trace(Variant variant, Rng& rng) {
  switch (variant) {
    case Variant::BeeaFull: {
      const BigInt v = rng.range(3, pow2(128));
      return beea_full(rng.range(1, v - 1), v).trace;
    }
    case Variant::BeeaCompact: {
      const BigInt v = 2 * rng.range(1, pow2(127)) + 1;
      return beea_compact(rng.range(1, v - 1), v).trace;
    }
    case Variant::AlgX: {
      const BigInt v = rng.range(3, pow2(128));
      return algx_modinv(rng.range(1, v - 1), v).trace;
    }
    case Variant::Bgcd:
      return openssl_bgcd(rng.range(1, pow2(128)), rng.range(1, pow2(128))).trace;
    case Variant::Euclid:
      return euclid_gcd(rng.range(1, pow2(128)), rng.range(1, pow2(128))).trace;
    default:
      throw ParameterError("no weight profile");
  }
}

std::vector<int> tail(const std::vector<int>& w, std::size_t n) {
  return std::vector<int>(w.end() - static_cast<long>(n), w.end());
}

}  // namespace

TEST_CASE("every preset round trips random victim traces") {
  Rng rng(1);
  for (const std::string& name : preset_names()) {
    const LayoutProfile profile = preset_profile(name);
    for (int i = 0; i < 1000; ++i) {
      const BranchTrace t = random_trace(profile.variant(), rng);
      CHECK_MESSAGE(decode_weights(encode_weights(t, profile), profile) == t, name);
    }
  }
}

TEST_CASE("halving bodies") {
  const LayoutProfile p = preset_profile("FULL_BEEA");
  const WeightTrace plain = encode_weights({Variant::BeeaFull, {Event::U_HALVE_PLAIN}}, p);
  const WeightTrace adjust = encode_weights({Variant::BeeaFull, {Event::U_HALVE_ADJUST}}, p);
  // Drop the exit weight, then compare the body.
  REQUIRE(plain.weights.size() >= 3);
  CHECK(tail(std::vector<int>(plain.weights.begin(), plain.weights.end() - 1), 2) == std::vector<int>{11, 3});
  CHECK(tail(std::vector<int>(adjust.weights.begin(), adjust.weights.end() - 1), 4) ==
        std::vector<int>{13, 4, 3, 3});
  CHECK(encode_weights({Variant::BeeaFull, {}}, p).weights.empty());
  CHECK(decode_weights({Variant::BeeaFull, {}}, p).events.empty());
}

TEST_CASE("subtraction branch is told apart by the next weight") {
  const LayoutProfile p = preset_profile("FULL_BEEA");
  const BranchTrace s2{Variant::BeeaFull, {Event::CMP_S2, Event::V_HALVE_PLAIN, Event::CMP_S1}};
  const BranchTrace s1{Variant::BeeaFull, {Event::CMP_S1, Event::U_HALVE_PLAIN, Event::CMP_S1}};
  const WeightTrace w2 = encode_weights(s2, p);
  const WeightTrace w1 = encode_weights(s1, p);
  // Same (5, 4, 4) body; the weight after it differs.
  CHECK(std::vector<int>(w2.weights.begin() + 1, w2.weights.begin() + 5) == std::vector<int>{5, 4, 4, 13});
  CHECK(std::vector<int>(w1.weights.begin() + 1, w1.weights.begin() + 5) == std::vector<int>{5, 4, 4, 8});
  CHECK(decode_weights(w2, p) == s2);
  CHECK(decode_weights(w1, p) == s1);
}

TEST_CASE("prefix decoding only grows") {
  Rng rng(2);
  const LayoutProfile p = preset_profile("COMPACT_BEEA");
  for (int i = 0; i < 50; ++i) {
    const BranchTrace t = random_trace(Variant::BeeaCompact, rng);
    const WeightTrace w = encode_weights(t, p);
    std::size_t last = 0;
    for (std::size_t n = 0; n <= w.weights.size(); n += 3) {
      const WeightTrace cut{w.variant, std::vector<int>(w.weights.begin(), w.weights.begin() + static_cast<long>(n))};
      const BranchTrace prefix = decode_weights_prefix(cut, p);
      REQUIRE(prefix.events.size() <= t.events.size());
      CHECK(std::equal(prefix.events.begin(), prefix.events.end(), t.events.begin()));
      CHECK(prefix.events.size() >= last);
      last = prefix.events.size();
    }
  }
}

TEST_CASE("tampered weights never decode to a wrong trace silently") {
  Rng rng(3);
  for (const std::string& name : preset_names()) {
    const LayoutProfile p = preset_profile(name);
    for (int i = 0; i < 100; ++i) {
      const WeightTrace w = encode_weights(random_trace(p.variant(), rng), p);
      if (w.weights.empty()) continue;
      WeightTrace bad = w;
      const std::size_t j = static_cast<std::size_t>(rng.below(static_cast<unsigned long>(w.weights.size())).get_ui());
      bad.weights[j] += 100;
      try {
        const BranchTrace t = decode_weights(bad, p);
        CHECK(encode_weights(t, p) == bad);
      } catch (const DecodeError& e) {
        CHECK(e.offset() <= j);
      }
    }
  }
  CHECK_THROWS_AS(decode_weights({Variant::AlgX, {1, 2}}, preset_profile("EUCLID")), DecodeError);
}

TEST_CASE("profiles with colliding patterns are rejected") {
  const LayoutProfile p = preset_profile("FULL_BEEA");
  auto bodies = p.bodies();
  bodies[Event::U_HALVE_ADJUST] = bodies[Event::U_HALVE_PLAIN];
  CHECK_THROWS_AS(LayoutProfile("bad", Variant::BeeaFull, bodies, p.transitions()), ParameterError);
  auto zero = p.bodies();
  zero[Event::CMP_S1] = {0};
  CHECK_THROWS_AS(LayoutProfile("bad", Variant::BeeaFull, zero, p.transitions()), ParameterError);
  CHECK_THROWS_AS(preset_profile("NOPE"), ParameterError);
}

TEST_CASE("profile text form round trips and loads from disk") {
  for (const std::string& name : preset_names()) {
    const LayoutProfile p = preset_profile(name);
    std::istringstream in(format_profile(p));
    const LayoutProfile q = parse_profile(in);
    CHECK(q.name() == p.name());
    CHECK(q.variant() == p.variant());
    CHECK(q.bodies() == p.bodies());
    CHECK(q.transitions() == p.transitions());
  }
  const std::string path = (std::filesystem::temp_directory_path() / "copycat_test_profile.txt").string();
  {
    std::ofstream out(path);
    out << format_profile(preset_profile("ALGX"));
  }
  CHECK(load_profile(path).bodies() == preset_profile("ALGX").bodies());
  std::filesystem::remove(path);
  CHECK(load_profile("BGCD").name() == "BGCD");
  CHECK_THROWS_AS(load_profile("no/such/file"), ParameterError);
  std::istringstream bad("profile x variant=euclid\nbody DIV_STEP 9\nwhat\n");
  CHECK_THROWS_AS(parse_profile(bad), ParseError);
}

TEST_CASE("step traces decode to leading zeros") {
  CHECK(decode_steps({{49, 49, 49, 46, 46, 46, 46, 46}}) == 3);
  CHECK(decode_steps({std::vector<int>(8, 46)}) == 0);
  CHECK_THROWS_AS(decode_steps({{46, 49, 46}}), DecodeError);
  CHECK_THROWS_AS(decode_steps({{49, 47}}), DecodeError);
  // Seven entries decide every z < 7.
  const StepTrace t = ecc_mulmod_steps(0b1011, 256);
  CHECK(decode_steps_prefix(t, 7) == 7);
  CHECK(decode_steps_prefix(ecc_mulmod_steps(pow2(252), 256), 7) == 3);
  Rng rng(4);
  const BigInt n = curve_by_name("p256").n;
  for (int i = 0; i < 10000; ++i) {
    const BigInt k = rng.range(1, n - 1);
    const int z = decode_steps(ecc_mulmod_steps(k, 256));
    CHECK(z == leading_zero_bits(k, n));
    if (z < 7) CHECK(decode_steps_prefix(ecc_mulmod_steps(k, 256), 7) == z);
  }
}

TEST_CASE("perturbation hook moves weights by one") {
  const LayoutProfile p = preset_profile("EUCLID");
  const WeightTrace w = encode_weights(euclid_gcd(1000, 37).trace, p);
  CHECK(perturb_weights(w, 0.0, 1) == w);
  const WeightTrace moved = perturb_weights(w, 1.0, 1);
  for (std::size_t i = 0; i < w.weights.size(); ++i) CHECK(std::abs(moved.weights[i] - w.weights[i]) == 1);
}
