#pragma once

// End-to-end trial runner: fixture -> victim -> channel encode/decode ->
// recovery -> comparison with ground truth, repeated and summarised as
// key=value lines.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "copycat/victims.hpp"

namespace copycat {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Attack {
  DsaSingle,
  EcdsaSingle,
  ElgamalSingle,
  RsaCrt,
  RsaD,
  RsaX931,
  EcdsaLattice,
};

// "dsa-single", "ecdsa-single", "elgamal-single", "rsa-crt", "rsa-d",
// "rsa-x931", "ecdsa-lattice".
std::string attack_id(Attack attack);
// Throws UsageError for unknown names.
Attack attack_from_id(const std::string& id);

struct ExperimentConfig {
  Attack attack = Attack::DsaSingle;
  std::size_t bits = 0;  // 0 selects the attack's default size
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  std::optional<std::string> variant;  // victim variant id
  std::optional<std::string> profile;  // channel preset name
  std::optional<std::string> curve;    // ECDSA curve name
  int l_max = 8;
  int z_min = 4;
  std::size_t batch = 0;  // 0 selects the filtered count for z_min
  std::size_t jobs = 1;
  std::optional<std::string> out;
  bool report_only = false;
};

// Fills defaults and checks every field; throws UsageError.
ExperimentConfig resolve_config(const ExperimentConfig& config);

// Filtered batch sizes and raw signature counts for z_min = 4..7; nullopt
// outside that range.
std::optional<std::size_t> lattice_batch_for(int z_min);
std::optional<std::size_t> lattice_raw_signatures_for(int z_min);

// Success probability of the lambda attack when p' = (p-1)/2, q' = (q-1)/2
// behave like random integers (8/pi^2), and when p, q are random primes
// (prod over primes l >= 3 of 1 - 1/(l-1)^2).
double rsa_d_prediction_random_integers();
double rsa_d_prediction_random_primes();

struct TrialResult {
  std::size_t index = 0;
  bool success = false;
  // Expected outcome from ground truth; false only for rsa-d keys whose
  // gcd(p-1, q-1) is not a power of two up to 2^l_max.
  bool expected_success = true;
  std::string detail;  // space-separated key=value pairs, deterministic
  double seconds = 0;
  double lll_seconds = -1;  // lattice attack only
  // Search instrumentation (RSA attacks).
  std::size_t expanded = 0;
  std::size_t peak_queue = 0;
  bool truth_pruned = false;
};

struct ExperimentReport {
  ExperimentConfig config;  // resolved
  std::vector<TrialResult> trials;
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::size_t unexpected_failures = 0;
  double seconds = 0;
};

// Per-trial seeds are derive_seed(seed, index + 1); index 0 seeds shared
// domain parameters. Results do not depend on `jobs`.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Lines whose key starts with "time." carry wall-clock values; everything
// else is a function of the configuration alone.
std::string format_report(const ExperimentReport& report);
// Drops the "time." lines.
std::string strip_timing(const std::string& report);

// 0 when every trial succeeded or in report-only mode, 1 otherwise.
int exit_status(const ExperimentReport& report);

}  // namespace copycat
