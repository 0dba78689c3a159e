#pragma once

// Key recovery from ECDSA signatures whose nonces are known to be short:
// hidden number problem lattice (embedding form) and LLL reduction.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "copycat/bigint.hpp"
#include "copycat/schemes.hpp"

namespace copycat {

// Square integer matrix, one basis vector per row.
using LatticeBasis = std::vector<std::vector<BigInt>>;

struct HnpSample {
  BigInt t;  // r s^-1 mod n
  BigInt u;  // h s^-1 mod n
  // Per-sample bound (>= the instance bound) when the exact leading-zero
  // count is known; the row is then scaled by 2^(z_i + 1).
  std::optional<int> z;
};

// k_i = u_i + t_i d mod n with 0 < k_i < n / 2^z.
struct HnpInstance {
  BigInt n;
  std::vector<HnpSample> samples;
  int z = 0;
};

// How much of each sample's leading-zero annotation enters the instance.
enum class NonceBound {
  Uniform,    // every k_i < n / 2^z
  PerSample,  // k_i < n / 2^(z_i)
  // The annotation is the exact bit length L - z_i of k_i, so
  // k_i - 2^(L-z_i-1) < 2^(L-z_i-1): u_i is shifted by that offset and the
  // bound becomes z_i + 1 (exact up to the factor 2^L / n < 2).
  ExactLength,
};

HnpInstance hnp_from_signatures(const std::vector<SignatureSample>& samples, const BigInt& n, int z,
                                NonceBound bound = NonceBound::Uniform);

// Rows 2^(z+1) n e_i, then (2^(z+1) t_i ..., 1, 0) and
// (2^(z+1) u_i - n ..., 0, n). The vector (2^(z+1) k_i - n ..., d, n) lies in
// the lattice. ParameterError for fewer than two samples, z < 1 or
// n / 2^z < 1.
LatticeBasis build_hnp_lattice(const HnpInstance& inst);

// delta = num / den in (1/4, 1).
struct LllDelta {
  std::int64_t num = 99;
  std::int64_t den = 100;
};

struct LllStats {
  std::size_t float_iterations = 0;
  std::size_t exact_swaps = 0;
  double seconds = 0;
};

// A floating-point pass (MPFR, fixed precision, deterministic) brings the
// basis close to reduced; an exact integral pass then finishes, so the output
// is size-reduced (|mu| <= 1/2) and satisfies the Lovasz condition exactly.
// Throws RankError on linearly dependent rows.
LatticeBasis lll_reduce(const LatticeBasis& basis, LllDelta delta = {}, LllStats* stats = nullptr);

// The exact integral pass alone.
LatticeBasis lll_reduce_exact(const LatticeBasis& basis, LllDelta delta = {},
                              LllStats* stats = nullptr);

// Exact check of both reduction conditions.
bool is_lll_reduced(const LatticeBasis& basis, LllDelta delta = {});

struct LatticeAttackResult {
  std::optional<BigInt> d;  // only ever a key that reproduces the public point
  std::size_t used_samples = 0;
  std::size_t dimension = 0;
  LllStats lll;
};

// Takes the first `batch` samples with z >= z_min, reduces their lattice and
// checks every row's d coordinate (both signs) against `q` = d G.
LatticeAttackResult recover_key_from_biased_nonces(const std::vector<SignatureSample>& samples,
                                                   const Curve& curve, const EcPoint& q, int z_min,
                                                   std::size_t batch,
                                                   NonceBound bound = NonceBound::ExactLength);

struct BiasedStream {
  std::vector<SignatureSample> filtered;  // z annotated from the step trace
  std::size_t generated = 0;              // nonces drawn, i.e. signatures observed
};

// Simulated signing stream: draws uniform nonces, runs the dummy-step model on
// each, decodes z from the steps, and signs (random h) only the nonces with
// z >= z_min, until `batch` are collected or `max_generated` nonces drawn.
BiasedStream collect_biased_signatures(const EcdsaKey& key, int z_min, std::size_t batch,
                                       std::size_t max_generated, std::uint64_t seed);

}  // namespace copycat
