#include "copycat/lattice.hpp"

#include <mpfr.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

#include "copycat/channel.hpp"
#include "copycat/error.hpp"
#include "copycat/victims.hpp"

namespace copycat {

namespace {

using Clock = std::chrono::steady_clock;

void check_delta(const LllDelta& delta) {
  // 1/4 < num/den < 1
  if (delta.den <= 0 || 4 * delta.num <= delta.den || delta.num >= delta.den) {
    throw ParameterError("LLL delta must lie in (1/4, 1)");
  }
}

void check_shape(const LatticeBasis& basis) {
  for (const auto& row : basis) {
    if (row.size() != basis.front().size()) throw ParameterError("ragged lattice basis");
  }
}

BigInt dot(const std::vector<BigInt>& a, const std::vector<BigInt>& b) {
  BigInt acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mpz_addmul(acc.get_mpz_t(), a[i].get_mpz_t(), b[i].get_mpz_t());
  return acc;
}

// round(num / den) for den > 0, halves rounded up.
BigInt round_div(const BigInt& num, const BigInt& den) {
  BigInt twice = 2 * num + den;
  BigInt q;
  mpz_fdiv_q(q.get_mpz_t(), twice.get_mpz_t(), BigInt(2 * den).get_mpz_t());
  return q;
}

void divexact(BigInt& x, const BigInt& d) { mpz_divexact(x.get_mpz_t(), x.get_mpz_t(), d.get_mpz_t()); }

// n x n grid of MPFR values at one precision.
class FloatGrid {
 public:
  FloatGrid(std::size_t n, mpfr_prec_t prec) : n_(n), data_(n * n) {
    for (auto& x : data_) {
      mpfr_init2(&x, prec);
      mpfr_set_zero(&x, 1);
    }
  }
  ~FloatGrid() {
    for (auto& x : data_) mpfr_clear(&x);
  }
  FloatGrid(const FloatGrid&) = delete;
  FloatGrid& operator=(const FloatGrid&) = delete;

  mpfr_ptr at(std::size_t i, std::size_t j) { return &data_[i * n_ + j]; }

  void swap_rows(std::size_t a, std::size_t b) {
    for (std::size_t j = 0; j < n_; ++j) mpfr_swap(at(a, j), at(b, j));
  }
  void swap_cols(std::size_t a, std::size_t b) {
    for (std::size_t i = 0; i < n_; ++i) mpfr_swap(at(i, a), at(i, b));
  }

 private:
  std::size_t n_;
  std::vector<__mpfr_struct> data_;
};

class Scalar {
 public:
  explicit Scalar(mpfr_prec_t prec) { mpfr_init2(v_, prec); }
  ~Scalar() { mpfr_clear(v_); }
  Scalar(const Scalar&) = delete;
  Scalar& operator=(const Scalar&) = delete;
  mpfr_ptr get() { return v_; }

 private:
  mpfr_t v_;
};

// Floating-point LLL in the style of Nguyen-Stehle: exact basis and Gram
// matrix, Cholesky coefficients in MPFR, lazy size reduction. Only a
// preconditioner; the exact pass decides the final answer.
void float_stage(LatticeBasis& b, const LllDelta& delta, LllStats& stats) {
  const std::size_t n = b.size();
  if (n < 2) return;
  const mpfr_prec_t prec = std::max<mpfr_prec_t>(96, static_cast<mpfr_prec_t>(1.6 * n) + 64);
  const std::size_t max_iterations = 200 * n * n + 100000;
  const std::size_t max_rounds = 200;
  const double eta = 0.51;
  // Slightly stronger than requested so the exact pass rarely swaps.
  const double delta_f = static_cast<double>(delta.num) / static_cast<double>(delta.den);
  const double delta_float = delta_f + (1.0 - delta_f) / 64;

  std::vector<std::vector<BigInt>> gram(n, std::vector<BigInt>(n));
  FloatGrid gf(n, prec), r(n, prec), mu(n, prec);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      gram[i][j] = gram[j][i] = dot(b[i], b[j]);
      mpfr_set_z(gf.at(i, j), gram[i][j].get_mpz_t(), MPFR_RNDN);
      mpfr_set(gf.at(j, i), gf.at(i, j), MPFR_RNDN);
    }
    if (gram[i][i] == 0) throw RankError("zero vector in lattice basis");
  }

  Scalar tmp(prec), lhs(prec), rhs(prec);

  // r_kj, mu_kj for j < k.
  auto cholesky_row = [&](std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
      mpfr_set(r.at(k, j), gf.at(k, j), MPFR_RNDN);
      for (std::size_t l = 0; l < j; ++l) {
        mpfr_mul(tmp.get(), mu.at(j, l), r.at(k, l), MPFR_RNDN);
        mpfr_sub(r.at(k, j), r.at(k, j), tmp.get(), MPFR_RNDN);
      }
      mpfr_div(mu.at(k, j), r.at(k, j), r.at(j, j), MPFR_RNDN);
    }
  };
  auto diagonal = [&](std::size_t k) {
    mpfr_set(r.at(k, k), gf.at(k, k), MPFR_RNDN);
    for (std::size_t l = 0; l < k; ++l) {
      mpfr_mul(tmp.get(), mu.at(k, l), r.at(k, l), MPFR_RNDN);
      mpfr_sub(r.at(k, k), r.at(k, k), tmp.get(), MPFR_RNDN);
    }
  };
  auto refresh_gram_row = [&](std::size_t k) {
    for (std::size_t i = 0; i < n; ++i) {
      gram[k][i] = gram[i][k] = dot(b[k], b[i]);
      mpfr_set_z(gf.at(k, i), gram[k][i].get_mpz_t(), MPFR_RNDN);
      mpfr_set(gf.at(i, k), gf.at(k, i), MPFR_RNDN);
    }
    if (gram[k][k] == 0) throw RankError("lattice basis rows are linearly dependent");
  };
  auto swap_rows = [&](std::size_t a, std::size_t c) {
    std::swap(b[a], b[c]);
    std::swap(gram[a], gram[c]);
    for (auto& row : gram) std::swap(row[a], row[c]);
    gf.swap_rows(a, c);
    gf.swap_cols(a, c);
  };

  diagonal(0);
  std::vector<BigInt> x(n);
  BigInt xz;
  std::size_t k = 1;
  while (k < n && stats.float_iterations < max_iterations) {
    ++stats.float_iterations;
    for (std::size_t round = 0; round < max_rounds; ++round) {
      cholesky_row(k);
      bool reduced = true;
      for (std::size_t j = 0; j < k && reduced; ++j) {
        if (mpfr_cmpabs_ui(mu.at(k, j), 1) >= 0 || std::fabs(mpfr_get_d(mu.at(k, j), MPFR_RNDN)) > eta) {
          reduced = false;
        }
      }
      if (reduced) break;
      bool any = false;
      for (std::size_t j = k; j-- > 0;) {
        mpfr_rint(tmp.get(), mu.at(k, j), MPFR_RNDN);
        mpfr_get_z(xz.get_mpz_t(), tmp.get(), MPFR_RNDN);
        x[j] = xz;
        if (xz == 0) continue;
        any = true;
        for (std::size_t l = 0; l < j; ++l) {
          mpfr_mul(lhs.get(), tmp.get(), mu.at(j, l), MPFR_RNDN);
          mpfr_sub(mu.at(k, l), mu.at(k, l), lhs.get(), MPFR_RNDN);
        }
      }
      if (!any) break;
      for (std::size_t j = 0; j < k; ++j) {
        if (x[j] == 0) continue;
        for (std::size_t c = 0; c < b[k].size(); ++c) {
          mpz_submul(b[k][c].get_mpz_t(), x[j].get_mpz_t(), b[j][c].get_mpz_t());
        }
      }
      refresh_gram_row(k);
    }
    diagonal(k);
    // Lovasz: delta r_{k-1} <= r_k + mu_{k,k-1}^2 r_{k-1}
    mpfr_mul_d(lhs.get(), r.at(k - 1, k - 1), delta_float, MPFR_RNDN);
    mpfr_mul(rhs.get(), mu.at(k, k - 1), r.at(k, k - 1), MPFR_RNDN);
    mpfr_add(rhs.get(), rhs.get(), r.at(k, k), MPFR_RNDN);
    if (mpfr_cmp(lhs.get(), rhs.get()) > 0) {
      swap_rows(k, k - 1);
      if (k == 1) {
        diagonal(0);
      } else {
        --k;
      }
    } else {
      ++k;
    }
  }
}

}  // namespace

LatticeBasis lll_reduce_exact(const LatticeBasis& basis, LllDelta delta, LllStats* stats) {
  check_delta(delta);
  check_shape(basis);
  const auto start = Clock::now();
  LatticeBasis b = basis;
  const std::size_t n = b.size();
  LllStats local;
  LllStats& st = stats ? *stats : local;
  if (n == 0) return b;

  // Cohen's integral LLL, 1-based: d[i] is the Gram determinant of the first
  // i vectors, lam[k][j] = d[j] mu_kj.
  auto row = [&](std::size_t k) -> std::vector<BigInt>& { return b[k - 1]; };
  std::vector<BigInt> d(n + 1);
  std::vector<std::vector<BigInt>> lam(n + 1, std::vector<BigInt>(n + 1));
  d[0] = 1;
  d[1] = dot(row(1), row(1));
  if (d[1] == 0) throw RankError("lattice basis rows are linearly dependent");
  const BigInt num = static_cast<long>(delta.num);
  const BigInt den = static_cast<long>(delta.den);

  auto redi = [&](std::size_t k, std::size_t l) {
    BigInt twice = 2 * lam[k][l];
    if (abs(twice) <= d[l]) return;
    BigInt q = round_div(lam[k][l], d[l]);
    for (std::size_t c = 0; c < row(k).size(); ++c) {
      mpz_submul(row(k)[c].get_mpz_t(), q.get_mpz_t(), row(l)[c].get_mpz_t());
    }
    lam[k][l] -= q * d[l];
    for (std::size_t i = 1; i < l; ++i) lam[k][i] -= q * lam[l][i];
  };

  std::size_t kmax = 1;
  auto swapi = [&](std::size_t k) {
    ++st.exact_swaps;
    std::swap(row(k), row(k - 1));
    for (std::size_t j = 1; j + 2 <= k; ++j) std::swap(lam[k][j], lam[k - 1][j]);
    const BigInt lambda = lam[k][k - 1];
    BigInt big_b = d[k - 2] * d[k] + lambda * lambda;
    divexact(big_b, d[k - 1]);
    for (std::size_t i = k + 1; i <= kmax; ++i) {
      const BigInt t = lam[i][k];
      lam[i][k] = d[k] * lam[i][k - 1] - lambda * t;
      divexact(lam[i][k], d[k - 1]);
      lam[i][k - 1] = big_b * t + lambda * lam[i][k];
      divexact(lam[i][k - 1], d[k]);
    }
    d[k - 1] = big_b;
  };

  std::size_t k = 2;
  while (k <= n) {
    if (k > kmax) {
      kmax = k;
      for (std::size_t j = 1; j <= k; ++j) {
        BigInt u = dot(row(k), row(j));
        for (std::size_t i = 1; i < j; ++i) {
          u = d[i] * u - lam[k][i] * lam[j][i];
          divexact(u, d[i - 1]);
        }
        if (j < k) {
          lam[k][j] = u;
        } else {
          if (u == 0) throw RankError("lattice basis rows are linearly dependent");
          d[k] = u;
        }
      }
    }
    redi(k, k - 1);
    const BigInt& lk = lam[k][k - 1];
    if (den * (d[k] * d[k - 2] + lk * lk) < num * d[k - 1] * d[k - 1]) {
      swapi(k);
      k = std::max<std::size_t>(2, k - 1);
      continue;
    }
    for (std::size_t l = k - 1; l-- > 1;) redi(k, l);
    ++k;
  }
  st.seconds += std::chrono::duration<double>(Clock::now() - start).count();
  return b;
}

LatticeBasis lll_reduce(const LatticeBasis& basis, LllDelta delta, LllStats* stats) {
  check_delta(delta);
  check_shape(basis);
  const auto start = Clock::now();
  LllStats local;
  LllStats& st = stats ? *stats : local;
  LatticeBasis b = basis;
  float_stage(b, delta, st);
  b = lll_reduce_exact(b, delta, &st);
  st.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return b;
}

bool is_lll_reduced(const LatticeBasis& basis, LllDelta delta) {
  check_delta(delta);
  check_shape(basis);
  const std::size_t n = basis.size();
  std::vector<BigInt> d(n + 1);
  std::vector<std::vector<BigInt>> lam(n + 1, std::vector<BigInt>(n + 1));
  d[0] = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t j = 1; j <= k; ++j) {
      BigInt u = dot(basis[k - 1], basis[j - 1]);
      for (std::size_t i = 1; i < j; ++i) {
        u = d[i] * u - lam[k][i] * lam[j][i];
        divexact(u, d[i - 1]);
      }
      if (j < k) {
        lam[k][j] = u;
      } else {
        if (u == 0) return false;
        d[k] = u;
      }
    }
  }
  for (std::size_t k = 2; k <= n; ++k) {
    for (std::size_t j = 1; j < k; ++j) {
      if (2 * abs(lam[k][j]) > d[j]) return false;
    }
    const BigInt& l = lam[k][k - 1];
    if (delta.den * (d[k] * d[k - 2] + l * l) < delta.num * d[k - 1] * d[k - 1]) return false;
  }
  return true;
}

HnpInstance hnp_from_signatures(const std::vector<SignatureSample>& samples, const BigInt& n, int z,
                                NonceBound bound) {
  HnpInstance inst;
  inst.n = n;
  inst.z = z;
  const std::size_t order_bits = bit_length(n);
  for (const auto& sig : samples) {
    const BigInt s_inv = modinv_ref(sig.s, n);
    HnpSample s;
    s.t = mod(sig.r * s_inv, n);
    s.u = mod(sig.h * s_inv, n);
    if (bound != NonceBound::Uniform) {
      if (!sig.z) throw ParameterError("signature sample lacks a z annotation");
      s.z = std::max(*sig.z, z);
    }
    if (bound == NonceBound::ExactLength) {
      const int zi = *sig.z;
      if (zi < 0 || static_cast<std::size_t>(zi) + 1 >= order_bits) {
        throw ParameterError("z annotation out of range for the group order");
      }
      s.u = mod(s.u - pow2(order_bits - static_cast<std::size_t>(zi) - 1), n);
      s.z = zi + 1;
    }
    inst.samples.push_back(std::move(s));
  }
  return inst;
}

LatticeBasis build_hnp_lattice(const HnpInstance& inst) {
  const std::size_t m = inst.samples.size();
  if (m < 2) throw ParameterError("HNP lattice needs at least two samples");
  if (inst.z < 1) throw ParameterError("HNP bound z must be at least 1");
  if (inst.n < 2) throw ParameterError("HNP group order must be at least 2");
  const std::size_t dim = m + 2;
  LatticeBasis basis(dim, std::vector<BigInt>(dim, 0));
  for (std::size_t i = 0; i < m; ++i) {
    const int z = inst.samples[i].z.value_or(inst.z);
    if (z < 1 || pow2(static_cast<std::size_t>(z)) > inst.n) {
      throw ParameterError("HNP bound z leaves no room below n");
    }
    const BigInt scale = pow2(static_cast<std::size_t>(z) + 1);
    basis[i][i] = scale * inst.n;
    basis[m][i] = scale * inst.samples[i].t;
    basis[m + 1][i] = scale * inst.samples[i].u - inst.n;
  }
  basis[m][m] = 1;
  basis[m + 1][m + 1] = inst.n;
  return basis;
}

LatticeAttackResult recover_key_from_biased_nonces(const std::vector<SignatureSample>& samples,
                                                   const Curve& curve, const EcPoint& q, int z_min,
                                                   std::size_t batch, NonceBound bound) {
  if (z_min < 1) throw ParameterError("z_min must be at least 1");
  LatticeAttackResult result;
  std::vector<SignatureSample> chosen;
  for (const auto& sig : samples) {
    if (chosen.size() == batch) break;
    if (sig.z && *sig.z >= z_min) chosen.push_back(sig);
  }
  result.used_samples = chosen.size();
  if (chosen.size() < 2) return result;

  const HnpInstance inst = hnp_from_signatures(chosen, curve.n, z_min, bound);
  const LatticeBasis reduced = lll_reduce(build_hnp_lattice(inst), LllDelta{}, &result.lll);
  const std::size_t m = chosen.size();
  result.dimension = m + 2;
  for (const auto& row : reduced) {
    for (int sign : {1, -1}) {
      const BigInt d = mod(sign * row[m], curve.n);
      if (d == 0) continue;
      if (ec_mul(curve, d, curve.g) == q) {
        result.d = d;
        return result;
      }
    }
  }
  return result;
}

BiasedStream collect_biased_signatures(const EcdsaKey& key, int z_min, std::size_t batch,
                                       std::size_t max_generated, std::uint64_t seed) {
  const BigInt& n = key.curve.n;
  const int order_bits = static_cast<int>(bit_length(n));
  Rng rng(seed);
  BiasedStream stream;
  while (stream.filtered.size() < batch && stream.generated < max_generated) {
    const BigInt k = rng.range(1, n - 1);
    ++stream.generated;
    const int z = decode_steps(ecc_mulmod_steps(k, order_bits));
    if (z < z_min) continue;
    const BigInt h = rng.below(n);
    SignatureSample sig = ecdsa_sign(key, h, k, derive_seed(seed, stream.generated));
    if (!sig.k || *sig.k != k) continue;  // k was unusable and replaced
    sig.z = z;
    stream.filtered.push_back(std::move(sig));
  }
  return stream;
}

}  // namespace copycat
