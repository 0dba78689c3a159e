#include <doctest.h>

#include <cmath>

#include "copycat/error.hpp"
#include "copycat/lattice.hpp"

using namespace copycat;

namespace {

using Rational = mpq_class;

// Exact rational Gram-Schmidt: mu and squared norms of b*_i.
struct Gso {
  std::vector<std::vector<Rational>> mu;
  std::vector<Rational> norm2;
};

Gso gram_schmidt(const LatticeBasis& b) {
  const std::size_t n = b.size(), dim = b[0].size();
  std::vector<std::vector<Rational>> star(n, std::vector<Rational>(dim));
  Gso g{std::vector<std::vector<Rational>>(n, std::vector<Rational>(n)), std::vector<Rational>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) star[i][k] = b[i][k];
    for (std::size_t j = 0; j < i; ++j) {
      Rational dot = 0;
      for (std::size_t k = 0; k < dim; ++k) dot += Rational(b[i][k]) * star[j][k];
      g.mu[i][j] = dot / g.norm2[j];
      for (std::size_t k = 0; k < dim; ++k) star[i][k] -= g.mu[i][j] * star[j][k];
    }
    Rational sq = 0;
    for (std::size_t k = 0; k < dim; ++k) sq += star[i][k] * star[i][k];
    g.norm2[i] = sq;
  }
  return g;
}

bool lovasz_and_size_reduced(const LatticeBasis& b, const Rational& delta) {
  const Gso g = gram_schmidt(b);
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (abs(g.mu[i][j]) > Rational(1, 2)) return false;
    }
    if (i > 0 && (delta - g.mu[i][i - 1] * g.mu[i][i - 1]) * g.norm2[i - 1] > g.norm2[i]) return false;
  }
  return true;
}

// Product of the squared Gram-Schmidt norms: the squared covolume.
Rational covolume2(const LatticeBasis& b) {
  Rational p = 1;
  for (const auto& x : gram_schmidt(b).norm2) p *= x;
  return p;
}

BigInt norm2(const std::vector<BigInt>& v) {
  BigInt s = 0;
  for (const auto& x : v) s += x * x;
  return s;
}

// Lagrange-Gauss reduction of a 2D basis.
std::pair<std::vector<BigInt>, std::vector<BigInt>> gauss_reduce(std::vector<BigInt> a, std::vector<BigInt> b) {
  if (norm2(a) > norm2(b)) std::swap(a, b);
  for (;;) {
    const Rational mu = Rational(a[0] * b[0] + a[1] * b[1], norm2(a));
    const Rational shifted = mu + Rational(1, 2);
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), shifted.get_num_mpz_t(), shifted.get_den_mpz_t());
    b = {b[0] - q * a[0], b[1] - q * a[1]};
    if (norm2(b) >= norm2(a)) return {a, b};
    std::swap(a, b);
  }
}

double log2_of(const BigInt& x) {
  long e = 0;
  const double m = mpz_get_d_2exp(&e, x.get_mpz_t());
  return std::log2(m) + static_cast<double>(e);
}

}  // namespace

TEST_CASE("identity basis is already reduced") {
  LatticeBasis id(5, std::vector<BigInt>(5, 0));
  for (int i = 0; i < 5; ++i) id[i][i] = 1;
  CHECK(lll_reduce(id) == id);
  CHECK(lll_reduce_exact(id) == id);
  CHECK(is_lll_reduced(id));
}

TEST_CASE("two-dimensional basis matches Gauss reduction") {
  for (long scale : {1L, 7L, 1000003L}) {
    const LatticeBasis b{{BigInt(scale), 0}, {BigInt(99 * scale), BigInt(scale)}};
    const LatticeBasis r = lll_reduce(b);
    const auto [s1, s2] = gauss_reduce(b[0], b[1]);
    CHECK(norm2(r[0]) == norm2(s1));
    CHECK(norm2(r[0]) == BigInt(scale) * scale);
    CHECK(norm2(r[1]) == norm2(s2));
  }
}

TEST_CASE("random 40-dimensional bases pass an exact rational check") {
  Rng rng(40);
  for (int round = 0; round < 2; ++round) {
    LatticeBasis b(40, std::vector<BigInt>(40));
    for (auto& row : b) {
      for (auto& x : row) x = rng.range(-(BigInt(1) << 20), BigInt(1) << 20);
    }
    LllStats stats;
    const LatticeBasis r = lll_reduce(b, {}, &stats);
    CHECK(lovasz_and_size_reduced(r, Rational(99, 100)));
    CHECK(is_lll_reduced(r));
    CHECK_FALSE(is_lll_reduced(b));
    CHECK(covolume2(r) == covolume2(b));
    const LatticeBasis e = lll_reduce_exact(b, LllDelta{3, 4});
    CHECK(lovasz_and_size_reduced(e, Rational(3, 4)));
    CHECK(covolume2(e) == covolume2(b));
  }
}

TEST_CASE("dependent rows and bad parameters") {
  const LatticeBasis dep{{1, 2, 3}, {2, 4, 6}, {0, 1, 1}};
  CHECK_THROWS_AS(lll_reduce(dep), RankError);
  CHECK_THROWS_AS(lll_reduce_exact(dep), RankError);
  const LatticeBasis ok{{1, 0}, {0, 1}};
  CHECK_THROWS_AS(lll_reduce(ok, LllDelta{1, 4}), ParameterError);
  CHECK_THROWS_AS(lll_reduce(ok, LllDelta{1, 1}), ParameterError);
}

TEST_CASE("HNP lattice shape and target vector") {
  const EcdsaKey key = ecdsa_keygen(curve_by_name("p256"), 3);
  const BigInt& n = key.curve.n;
  const BiasedStream stream = collect_biased_signatures(key, 7, 42, 10000, 4);
  REQUIRE(stream.filtered.size() == 42);
  const HnpInstance inst = hnp_from_signatures(stream.filtered, n, 7);
  const LatticeBasis b = build_hnp_lattice(inst);
  CHECK(b.size() == 44);
  CHECK(b[0].size() == 44);

  const std::size_t m = 42;
  const BigInt scale = pow2(8);
  std::vector<BigInt> target(m + 2);
  for (std::size_t i = 0; i < m; ++i) {
    const BigInt& k = *stream.filtered[i].k;
    CHECK(k < n / pow2(7));
    CHECK(mod(inst.samples[i].u + inst.samples[i].t * key.d - k, n) == 0);
    target[i] = scale * k - n;
  }
  target[m] = key.d;
  target[m + 1] = n;
  // Solve for the integer coefficients: u-row once, t-row d times, and the
  // remainder of each coordinate on the diagonal rows.
  std::vector<BigInt> rest(m + 2);
  for (std::size_t j = 0; j < m + 2; ++j) rest[j] = target[j] - b[m + 1][j] - key.d * b[m][j];
  for (std::size_t i = 0; i < m; ++i) {
    CHECK(mod(rest[i], b[i][i]) == 0);
    rest[i] = 0;
  }
  CHECK(rest[m] == 0);
  CHECK(rest[m + 1] == 0);

  // Gaussian heuristic: sqrt(D / (2 pi e)) det^(1/D).
  const double dim = static_cast<double>(m + 2);
  const double log2_det = static_cast<double>(m) * log2_of(scale * n) + log2_of(n);
  const double log2_gh = 0.5 * std::log2(dim / (2 * M_PI * M_E)) + log2_det / dim;
  CHECK(0.5 * log2_of(norm2(target)) < log2_gh);

  std::vector<SignatureSample> two(stream.filtered.begin(), stream.filtered.begin() + 2);
  CHECK(build_hnp_lattice(hnp_from_signatures(two, n, 7)).size() == 4);
  std::vector<SignatureSample> one(stream.filtered.begin(), stream.filtered.begin() + 1);
  CHECK_THROWS_AS(build_hnp_lattice(hnp_from_signatures(one, n, 7)), ParameterError);
  CHECK_THROWS_AS(build_hnp_lattice(hnp_from_signatures(two, n, 0)), ParameterError);
}

TEST_CASE("key recovery from z >= 7 nonces on P-256") {
  const EcdsaKey key = ecdsa_keygen(curve_by_name("p256"), 5);
  const BiasedStream stream = collect_biased_signatures(key, 7, 42, 8064, 6);
  REQUIRE(stream.filtered.size() == 42);
  for (const auto& s : stream.filtered) CHECK(*s.z == leading_zero_bits(*s.k, key.curve.n));
  const LatticeAttackResult r = recover_key_from_biased_nonces(stream.filtered, key.curve, key.q, 7, 42);
  REQUIRE(r.d);
  CHECK(*r.d == key.d);
  CHECK(r.dimension == 44);
}

TEST_CASE("unbiased nonces give no key") {
  const EcdsaKey key = ecdsa_keygen(curve_by_name("p256"), 7);
  std::vector<SignatureSample> unbiased;
  for (std::uint64_t i = 0; unbiased.size() < 42; ++i) {
    SignatureSample s = ecdsa_sign(key, BigInt(i + 1), std::nullopt, i);
    s.z = leading_zero_bits(*s.k, key.curve.n);
    if (*s.z == 0) unbiased.push_back(s);
  }
  CHECK_FALSE(recover_key_from_biased_nonces(unbiased, key.curve, key.q, 1, 42).d);
  CHECK_THROWS_AS(recover_key_from_biased_nonces(unbiased, key.curve, key.q, 0, 42), ParameterError);
  // Claiming a bias that is not there.
  for (auto& s : unbiased) s.z = 7;
  const LatticeAttackResult r = recover_key_from_biased_nonces(unbiased, key.curve, key.q, 7, 42);
  CHECK_FALSE(r.d);
}

TEST_CASE("filtering keeps a 2^-z fraction of nonces") {
  const EcdsaKey key = ecdsa_keygen(toy_curve(), 8);
  const BigInt& n = key.curve.n;
  const std::size_t order_bits = bit_length(n);
  for (int z : {2, 4}) {
    const BiasedStream s = collect_biased_signatures(key, z, 1000000, 20000, 9 + z);
    CHECK(s.generated == 20000);
    // Exact: k uniform in [1, n-1] and z(k) >= z iff k < 2^(L-z).
    const double p = (std::ldexp(1.0, static_cast<int>(order_bits) - z) - 1) / (n.get_d() - 1);
    const double mean = p * 20000, sigma = std::sqrt(20000 * p * (1 - p));
    CHECK(std::abs(static_cast<double>(s.filtered.size()) - mean) < 3 * sigma);
    for (const auto& sig : s.filtered) CHECK(*sig.z >= z);
  }
  const BiasedStream a = collect_biased_signatures(key, 3, 20, 5000, 1), b = collect_biased_signatures(key, 3, 20, 5000, 1);
  REQUIRE(a.filtered.size() == b.filtered.size());
  for (std::size_t i = 0; i < a.filtered.size(); ++i) CHECK(a.filtered[i].s == b.filtered[i].s);
}
