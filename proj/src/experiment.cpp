#include "copycat/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <thread>

#include "copycat/channel.hpp"
#include "copycat/error.hpp"
#include "copycat/lattice.hpp"
#include "copycat/recover_inverse.hpp"
#include "copycat/recover_rsa.hpp"
#include "copycat/schemes.hpp"

namespace copycat {

namespace {

using Clock = std::chrono::steady_clock;

const BigInt kRsaExponent = 65537;

struct AttackName {
  Attack attack;
  const char* id;
};

constexpr AttackName kAttacks[] = {
    {Attack::DsaSingle, "dsa-single"},     {Attack::EcdsaSingle, "ecdsa-single"},
    {Attack::ElgamalSingle, "elgamal-single"}, {Attack::RsaCrt, "rsa-crt"},
    {Attack::RsaD, "rsa-d"},               {Attack::RsaX931, "rsa-x931"},
    {Attack::EcdsaLattice, "ecdsa-lattice"},
};

std::string fixed(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::vector<Variant> allowed_variants(Attack attack) {
  switch (attack) {
    case Attack::DsaSingle:
    case Attack::EcdsaSingle: return {Variant::BeeaCompact, Variant::BeeaFull, Variant::AlgX};
    case Attack::ElgamalSingle: return {Variant::AlgX, Variant::BeeaFull};  // p - 1 is even
    case Attack::RsaCrt:
    case Attack::RsaD: return {Variant::BeeaFull};
    case Attack::RsaX931: return {Variant::Bgcd};
    case Attack::EcdsaLattice: return {Variant::EccMulmod};
  }
  return {};
}

Variant default_variant(Attack attack) {
  switch (attack) {
    case Attack::DsaSingle: return Variant::BeeaCompact;
    case Attack::EcdsaSingle:
    case Attack::ElgamalSingle: return Variant::AlgX;
    default: return allowed_variants(attack).front();
  }
}

std::size_t dsa_modulus_bits(std::size_t order_bits) {
  if (order_bits < 160) return std::max<std::size_t>(4 * order_bits, 64);
  if (order_bits == 160) return 1024;
  if (order_bits <= 256) return 2048;
  return 3072;
}

LayoutProfile profile_or_usage(const std::string& spec) {
  try {
    return load_profile(spec);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

std::optional<std::string> curve_for_bits(std::size_t bits) {
  for (const char* name : {"toy", "brainpoolP160r1", "p256"}) {
    if (bit_length(curve_by_name(name).n) == bits) return name;
  }
  return std::nullopt;
}

BranchTrace run_inverse_victim(Variant variant, const BigInt& u, const BigInt& v) {
  switch (variant) {
    case Variant::BeeaFull: return beea_full(u, v).trace;
    case Variant::BeeaCompact: return beea_compact(u, v).trace;
    case Variant::AlgX: return algx_modinv(u, v).trace;
    default: throw ParameterError("not an inversion victim");
  }
}

// Encodes through the channel and decodes again, as the attacker sees it.
BranchTrace through_channel(const BranchTrace& trace, const LayoutProfile& profile,
                            std::size_t& weights) {
  const WeightTrace observed = encode_weights(trace, profile);
  weights = observed.weights.size();
  return decode_weights(observed, profile);
}

struct Context {
  ExperimentConfig config;
  Variant variant = Variant::BeeaFull;
  std::optional<LayoutProfile> profile;
  std::optional<DsaParams> dsa;
  std::optional<Curve> curve;
};

void nonce_trial(const Context& ctx, const SignatureSample& sig, const BigInt& modulus,
                 const BigInt& secret, TrialResult& out,
                 BigInt (*key_from_nonce)(const SignatureSample&, const BigInt&, const BigInt&)) {
  const BigInt& k = *sig.k;
  const BranchTrace trace = run_inverse_victim(ctx.variant, k, modulus);
  std::size_t weights = 0;
  const BranchTrace decoded = through_channel(trace, *ctx.profile, weights);
  const BigInt k_rec = recover_unknown_operand(decoded, modulus);
  const BigInt x_rec = key_from_nonce(sig, k_rec, modulus);
  out.success = decoded == trace && k_rec == k && x_rec == secret;
  out.detail = "events=" + std::to_string(trace.events.size()) +
               " weights=" + std::to_string(weights) + " nonce=" + (k_rec == k ? "ok" : "wrong") +
               " key=" + (x_rec == secret ? "ok" : "wrong");
}

BigInt elgamal_from_nonce(const SignatureSample& sig, const BigInt& k, const BigInt& order) {
  return elgamal_key_from_nonce(sig, k, order + 1);
}

void search_detail(const Factorization& f, TrialResult& out) {
  out.expanded = f.stats.expanded;
  out.peak_queue = f.stats.peak_queue;
  out.truth_pruned = f.stats.truth_pruned;
  out.detail += " expanded=" + std::to_string(f.stats.expanded) +
                " peak_queue=" + std::to_string(f.stats.peak_queue) +
                " max_verified=" + std::to_string(f.stats.max_verified) +
                " truth_depth=" + std::to_string(f.stats.truth_depth) +
                " truth_pruned=" + std::to_string(f.stats.truth_pruned ? 1 : 0);
}

bool factors_match(const Factorization& f, const RsaKey& key) {
  return f.factors && f.factors->first == key.p && f.factors->second == key.q;
}

// Largest i with 2^i | x.
int two_adic(const BigInt& x) { return static_cast<int>(trailing_zeros(x)); }

void run_trial(const Context& ctx, TrialResult& out) {
  const ExperimentConfig& cfg = ctx.config;
  const std::uint64_t seed = derive_seed(cfg.seed, out.index + 1);
  Rng rng(derive_seed(seed, 0));
  switch (cfg.attack) {
    case Attack::DsaSingle: {
      const DsaKey key = dsa_keygen(*ctx.dsa, derive_seed(seed, 1));
      const SignatureSample sig = dsa_sign(key, rng.below(key.params.n), std::nullopt, derive_seed(seed, 2));
      nonce_trial(ctx, sig, key.params.n, key.x, out, &dsa_key_from_nonce);
      break;
    }
    case Attack::EcdsaSingle: {
      const EcdsaKey key = ecdsa_keygen(*ctx.curve, derive_seed(seed, 1));
      const SignatureSample sig = ecdsa_sign(key, rng.below(key.curve.n), std::nullopt, derive_seed(seed, 2));
      nonce_trial(ctx, sig, key.curve.n, key.d, out, &dsa_key_from_nonce);
      break;
    }
    case Attack::ElgamalSingle: {
      const ElGamalKey key = elgamal_keygen(cfg.bits, derive_seed(seed, 1));
      const BigInt order = key.p - 1;
      // The key is only determined modulo (p-1)/gcd(r, p-1); keep signing
      // until r is a unit so that the comparison is exact.
      SignatureSample sig;
      std::size_t resigned = 0;
      for (std::uint64_t attempt = 0;; ++attempt) {
        sig = elgamal_sign(key, rng.below(order), std::nullopt, derive_seed(seed, 2 + attempt));
        if (gcd(sig.r, order) == 1) break;
        ++resigned;
      }
      nonce_trial(ctx, sig, order, key.x, out, &elgamal_from_nonce);
      out.detail += " resigned=" + std::to_string(resigned);
      break;
    }
    case Attack::RsaCrt: {
      const RsaKey key = rsa_keygen(cfg.bits, kRsaExponent, derive_seed(seed, 1));
      const BranchTrace trace = beea_full(key.q, key.p).trace;
      std::size_t weights = 0;
      const BranchTrace decoded = through_channel(trace, *ctx.profile, weights);
      SearchOptions opts;
      opts.truth = std::make_pair(key.p, key.q);
      out.detail = "events=" + std::to_string(trace.events.size());
      try {
        const Factorization f = recover_pq_from_crt_trace(decoded, key.n, opts);
        out.success = factors_match(f, key);
        search_detail(f, out);
      } catch (const NotFoundError&) {
        out.detail += " search=exhausted";
      }
      break;
    }
    case Attack::RsaD: {
      const RsaKey key = rsa_keygen(cfg.bits, kRsaExponent, derive_seed(seed, 1));
      const BranchTrace trace = beea_full(key.e, key.lambda).trace;
      std::size_t weights = 0;
      const BranchTrace decoded = through_channel(trace, *ctx.profile, weights);
      const BigInt g = gcd(key.p - 1, key.q - 1);
      const int v2 = two_adic(g);
      const bool is_pow2 = g == pow2(static_cast<std::size_t>(v2));
      out.expected_success = is_pow2 && v2 <= cfg.l_max;
      SearchOptions opts;
      opts.truth = std::make_pair(key.p, key.q);
      const Factorization f = recover_pq_from_d_trace(decoded, key.e, key.n, cfg.l_max, opts);
      out.success = factors_match(f, key);
      out.detail = "events=" + std::to_string(trace.events.size()) + " gcd_v2=" + std::to_string(v2) +
                   " gcd_pow2=" + std::to_string(is_pow2 ? 1 : 0) + " i=" + std::to_string(f.i);
      search_detail(f, out);
      break;
    }
    case Attack::RsaX931: {
      const RsaKey key = rsa_keygen(cfg.bits, kRsaExponent, derive_seed(seed, 1));
      const BranchTrace trace = openssl_bgcd(key.p - 1, key.q - 1).trace;
      std::size_t weights = 0;
      const BranchTrace decoded = through_channel(trace, *ctx.profile, weights);
      SearchOptions opts;
      opts.truth = std::make_pair(key.p, key.q);
      out.detail = "events=" + std::to_string(trace.events.size());
      try {
        const Factorization f = recover_pq_from_gcd_trace(decoded, key.n, opts);
        out.success = factors_match(f, key);
        search_detail(f, out);
      } catch (const NotFoundError&) {
        out.detail += " search=exhausted";
      }
      break;
    }
    case Attack::EcdsaLattice: {
      const EcdsaKey key = ecdsa_keygen(*ctx.curve, derive_seed(seed, 1));
      const std::size_t budget = lattice_raw_signatures_for(cfg.z_min)
                                     ? (*lattice_raw_signatures_for(cfg.z_min) * 3 + 1) / 2
                                     : (3 * cfg.batch << cfg.z_min) / 2;
      const BiasedStream stream = collect_biased_signatures(key, cfg.z_min, cfg.batch, budget, derive_seed(seed, 2));
      out.detail = "signatures=" + std::to_string(stream.generated) + " budget=" + std::to_string(budget) +
                   " filtered=" + std::to_string(stream.filtered.size());
      if (stream.filtered.size() < cfg.batch) {
        out.detail += " stream=short";
        break;
      }
      const LatticeAttackResult r =
          recover_key_from_biased_nonces(stream.filtered, key.curve, key.q, cfg.z_min, cfg.batch);
      out.success = r.d && *r.d == key.d;
      out.lll_seconds = r.lll.seconds;
      out.detail += " dim=" + std::to_string(r.dimension) +
                    " float_iterations=" + std::to_string(r.lll.float_iterations) +
                    " exact_swaps=" + std::to_string(r.lll.exact_swaps);
      break;
    }
  }
}

Context make_context(const ExperimentConfig& cfg) {
  Context ctx;
  ctx.config = cfg;
  ctx.variant = variant_from_id(*cfg.variant);
  if (cfg.profile) ctx.profile = profile_or_usage(*cfg.profile);
  if (cfg.curve) ctx.curve = curve_by_name(*cfg.curve);
  if (cfg.attack == Attack::DsaSingle && cfg.trials > 0) {
    ctx.dsa = dsa_paramgen(dsa_modulus_bits(cfg.bits), cfg.bits, derive_seed(cfg.seed, 0));
  }
  return ctx;
}

}  // namespace

std::string attack_id(Attack attack) {
  for (const auto& a : kAttacks) {
    if (a.attack == attack) return a.id;
  }
  return "?";
}

Attack attack_from_id(const std::string& id) {
  for (const auto& a : kAttacks) {
    if (id == a.id) return a.attack;
  }
  throw UsageError("unknown attack: " + id);
}

std::optional<std::size_t> lattice_batch_for(int z_min) {
  switch (z_min) {
    case 4: return 75;
    case 5: return 58;
    case 6: return 46;
    case 7: return 42;
    default: return std::nullopt;
  }
}

std::optional<std::size_t> lattice_raw_signatures_for(int z_min) {
  switch (z_min) {
    case 4: return 1200;
    case 5: return 1856;
    case 6: return 2944;
    case 7: return 5376;
    default: return std::nullopt;
  }
}

double rsa_d_prediction_random_integers() { return 8.0 / (std::numbers::pi * std::numbers::pi); }

double rsa_d_prediction_random_primes() {
  static const double value = [] {
    // The omitted tail is below 1 / (N ln N).
    constexpr std::size_t kLimit = 2000000;
    std::vector<bool> composite(kLimit + 1, false);
    double product = 1.0;
    for (std::size_t l = 2; l <= kLimit; ++l) {
      if (composite[l]) continue;
      for (std::size_t m = l * l; m <= kLimit; m += l) composite[m] = true;
      if (l >= 3) {
        const double t = 1.0 / static_cast<double>(l - 1);
        product *= 1.0 - t * t;
      }
    }
    return product;
  }();
  return value;
}

ExperimentConfig resolve_config(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  if (c.jobs == 0) throw UsageError("--jobs must be at least 1");
  if (c.l_max < 1 || c.l_max > 64) throw UsageError("--l-max must lie in [1, 64]");

  const auto allowed = allowed_variants(c.attack);
  if (!c.variant) c.variant = std::string(variant_id(default_variant(c.attack)));
  Variant variant;
  try {
    variant = variant_from_id(*c.variant);
  } catch (const std::exception&) {
    throw UsageError("unknown variant: " + *c.variant);
  }
  if (std::find(allowed.begin(), allowed.end(), variant) == allowed.end()) {
    throw UsageError("variant " + *c.variant + " does not apply to " + attack_id(c.attack));
  }

  if (c.attack == Attack::EcdsaLattice) {
    if (c.profile) throw UsageError("--profile does not apply to step traces");
  } else {
    if (!c.profile) c.profile = default_profile(variant).name();
    const LayoutProfile profile = profile_or_usage(*c.profile);
    if (profile.variant() != variant) {
      throw UsageError("profile " + profile.name() + " is for variant " +
                       std::string(variant_id(profile.variant())));
    }
  }

  const bool uses_curve = c.attack == Attack::EcdsaSingle || c.attack == Attack::EcdsaLattice;
  if (!uses_curve && c.curve) throw UsageError("--curve applies to ECDSA attacks only");
  if (uses_curve) {
    if (!c.curve) {
      if (c.bits == 0) {
        c.curve = c.attack == Attack::EcdsaSingle ? "toy" : "p256";
      } else if (auto name = curve_for_bits(c.bits)) {
        c.curve = *name;
      } else {
        throw UsageError("no curve with a " + std::to_string(c.bits) + "-bit order");
      }
    }
    Curve curve;
    try {
      curve = curve_by_name(*c.curve);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    const std::size_t order_bits = bit_length(curve.n);
    if (c.bits != 0 && c.bits != order_bits) {
      throw UsageError("curve " + *c.curve + " has a " + std::to_string(order_bits) + "-bit order");
    }
    c.bits = order_bits;
  }

  switch (c.attack) {
    case Attack::DsaSingle:
      if (c.bits == 0) c.bits = 160;
      if (c.bits < 8) throw UsageError("DSA order needs at least 8 bits");
      break;
    case Attack::ElgamalSingle:
      if (c.bits == 0) c.bits = 256;
      if (c.bits < 16) throw UsageError("ElGamal modulus needs at least 16 bits");
      break;
    case Attack::RsaCrt:
    case Attack::RsaD:
    case Attack::RsaX931:
      if (c.bits == 0) c.bits = 256;
      if (c.bits < 64 || c.bits % 2 != 0) throw UsageError("RSA modulus bits must be even and >= 64");
      break;
    case Attack::EcdsaLattice:
      if (c.z_min < 1 || static_cast<std::size_t>(c.z_min) + 2 >= c.bits) {
        throw UsageError("--z-min out of range for the curve order");
      }
      if (c.batch == 0) {
        const auto batch = lattice_batch_for(c.z_min);
        if (!batch) throw UsageError("--batch is required for z_min outside 4..7");
        c.batch = *batch;
      }
      if (c.batch < 2) throw UsageError("--batch must be at least 2");
      if (!lattice_raw_signatures_for(c.z_min) && c.z_min > 40) {
        throw UsageError("--z-min too large for a simulated stream");
      }
      break;
    case Attack::EcdsaSingle: break;
  }
  return c;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  report.config = resolve_config(config);
  const auto start = Clock::now();
  const Context ctx = make_context(report.config);
  report.trials.resize(report.config.trials);
  for (std::size_t i = 0; i < report.trials.size(); ++i) report.trials[i].index = i;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= report.trials.size()) return;
      TrialResult& t = report.trials[i];
      const auto t0 = Clock::now();
      try {
        run_trial(ctx, t);
      } catch (const std::exception& e) {
        t.success = false;
        std::string what = e.what();
        std::replace(what.begin(), what.end(), ' ', '_');
        t.detail += (t.detail.empty() ? "" : " ") + std::string("error=") + what;
      }
      t.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    }
  };
  const std::size_t jobs = std::min(report.config.jobs, std::max<std::size_t>(report.trials.size(), 1));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (const auto& t : report.trials) {
    if (t.success) {
      ++report.successes;
    } else {
      ++report.failures;
      if (t.expected_success) ++report.unexpected_failures;
    }
  }
  report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return report;
}

std::string format_report(const ExperimentReport& report) {
  const ExperimentConfig& c = report.config;
  std::ostringstream out;
  out << "attack=" << attack_id(c.attack) << '\n';
  out << "bits=" << c.bits << '\n';
  out << "trials=" << c.trials << '\n';
  out << "seed=" << c.seed << '\n';
  out << "variant=" << c.variant.value_or("") << '\n';
  if (c.profile) out << "profile=" << *c.profile << '\n';
  if (c.curve) out << "curve=" << *c.curve << '\n';
  if (c.attack == Attack::RsaD) out << "l_max=" << c.l_max << '\n';
  if (c.attack == Attack::EcdsaLattice) {
    out << "z_min=" << c.z_min << '\n';
    out << "batch=" << c.batch << '\n';
  }
  for (const auto& t : report.trials) {
    out << "trial." << t.index << '=' << (t.success ? "ok" : "fail");
    if (!t.detail.empty()) out << ' ' << t.detail;
    out << '\n';
  }
  for (const auto& t : report.trials) {
    out << "time.trial." << t.index << ".seconds=" << fixed(t.seconds) << '\n';
    if (t.lll_seconds >= 0) out << "time.trial." << t.index << ".lll_seconds=" << fixed(t.lll_seconds) << '\n';
  }
  out << "successes=" << report.successes << '\n';
  out << "failures=" << report.failures << '\n';
  if (!report.trials.empty()) {
    const double n = static_cast<double>(report.trials.size());
    out << "success_rate=" << fixed(static_cast<double>(report.successes) / n) << '\n';
    const bool search = c.attack == Attack::RsaCrt || c.attack == Attack::RsaD || c.attack == Attack::RsaX931;
    if (search) {
      std::size_t peak = 0, expanded = 0, pruned = 0;
      for (const auto& t : report.trials) {
        peak = std::max(peak, t.peak_queue);
        expanded = std::max(expanded, t.expanded);
        if (t.truth_pruned) ++pruned;
      }
      out << "max_peak_queue=" << peak << '\n';
      out << "max_expanded=" << expanded << '\n';
      out << "truth_pruned_trials=" << pruned << '\n';
    }
    if (c.attack == Attack::RsaD) {
      std::size_t expected = 0;
      for (const auto& t : report.trials) expected += t.expected_success ? 1 : 0;
      out << "expected_successes=" << expected << '\n';
      out << "unexpected_failures=" << report.unexpected_failures << '\n';
      out << "prediction.random_integers=" << fixed(rsa_d_prediction_random_integers()) << '\n';
      out << "prediction.random_primes=" << fixed(rsa_d_prediction_random_primes()) << '\n';
    }
    double total = 0;
    for (const auto& t : report.trials) total += t.seconds;
    out << "time.mean_trial_seconds=" << fixed(total / n) << '\n';
  }
  out << "time.total_seconds=" << fixed(report.seconds) << '\n';
  return out.str();
}

std::string strip_timing(const std::string& report) {
  std::istringstream in(report);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind("time.", 0) == 0) continue;
    out += line;
    out += '\n';
  }
  return out;
}

int exit_status(const ExperimentReport& report) {
  if (report.config.report_only || report.failures == 0) return 0;
  return 1;
}

}  // namespace copycat
