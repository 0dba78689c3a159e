// copycat: experiment runner and trace/fixture/recovery utilities.
//
// Exit status: 0 success, 1 a recovery or replay failed, 2 usage or I/O error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "copycat/bigint.hpp"
#include "copycat/channel.hpp"
#include "copycat/error.hpp"
#include "copycat/experiment.hpp"
#include "copycat/fixtures.hpp"
#include "copycat/lattice.hpp"
#include "copycat/recover_inverse.hpp"
#include "copycat/recover_rsa.hpp"
#include "copycat/schemes.hpp"
#include "copycat/trace_io.hpp"
#include "copycat/victims.hpp"

using namespace copycat;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

void emit(const std::optional<std::string>& path, const std::string& text) {
  if (path) {
    write_text_file(*path, text);
  } else {
    std::cout << text;
  }
}

BigInt number(const std::string& text, const char* what) {
  try {
    return from_decimal(text);
  } catch (const std::exception&) {
    throw UsageError(std::string(what) + " is not a decimal integer: " + text);
  }
}

LayoutProfile profile_for(Variant variant, const std::optional<std::string>& name) {
  LayoutProfile profile = name ? load_profile(*name) : default_profile(variant);
  if (profile.variant() != variant) {
    throw UsageError("profile " + profile.name() + " does not match variant " + std::string(variant_id(variant)));
  }
  return profile;
}

// Branch trace from a branch or weight file; weight files are decoded first.
BranchTrace load_branch_trace(const std::string& path, const std::optional<std::string>& profile) {
  const TraceFile file = read_trace_file(path);
  switch (file.kind) {
    case TraceKind::Branch: return file.branch;
    case TraceKind::Weight: return decode_weights(file.weight, profile_for(file.variant, profile));
    case TraceKind::Step: break;
  }
  throw UsageError(path + " holds a step trace, not a branch or weight trace");
}

BranchTrace run_victim(Variant variant, const BigInt& u, const BigInt& v) {
  switch (variant) {
    case Variant::BeeaFull: return beea_full(u, v).trace;
    case Variant::BeeaCompact: return beea_compact(u, v).trace;
    case Variant::AlgX: return algx_modinv(u, v).trace;
    case Variant::Bgcd: return openssl_bgcd(u, v).trace;
    case Variant::Euclid: return euclid_gcd(u, v).trace;
    case Variant::EccMulmod: break;
  }
  throw UsageError("ecc-mulmod traces take --k and --order-bits");
}

std::vector<FixtureRecord> load_fixtures(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_fixtures(in);
}

const FixtureRecord& find_record(const std::vector<FixtureRecord>& records, const std::string& tag,
                                 const std::string& kind, const std::string& path) {
  for (const auto& r : records) {
    if (r.tag == tag && r.kind == kind) return r;
  }
  throw UsageError(path + " has no " + tag + " " + kind + " record");
}

std::string factor_report(const Factorization& f) { return format_report(f); }

// ---------------------------------------------------------------- run

struct RunArgs {
  std::string attack;
  std::size_t bits = 0;
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  std::string variant, profile, curve, out;
  int l_max = 8;
  int z_min = 4;
  std::size_t batch = 0;
  std::size_t jobs = 1;
  bool report_only = false;
};

int cmd_run(const RunArgs& a) {
  ExperimentConfig c;
  c.attack = attack_from_id(a.attack);
  c.bits = a.bits;
  c.trials = a.trials;
  c.seed = a.seed;
  if (!a.variant.empty()) c.variant = a.variant;
  if (!a.profile.empty()) c.profile = a.profile;
  if (!a.curve.empty()) c.curve = a.curve;
  c.l_max = a.l_max;
  c.z_min = a.z_min;
  c.batch = a.batch;
  c.jobs = a.jobs;
  if (!a.out.empty()) c.out = a.out;
  c.report_only = a.report_only;
  const ExperimentReport report = run_experiment(c);
  const std::string text = format_report(report);
  std::cout << text;
  if (c.out) write_text_file(*c.out, text);
  return exit_status(report);
}

// ---------------------------------------------------------------- trace

struct TraceArgs {
  std::string file;
  std::string victim;
  std::string u, v, k;
  int order_bits = 0;
  std::string kind = "branch";
  std::string profile;
  std::string out;
};

std::optional<std::string> opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

int cmd_trace_gen(const TraceArgs& a) {
  const Variant variant = variant_from_id(a.victim);
  std::string text;
  if (variant == Variant::EccMulmod) {
    if (a.k.empty() || a.order_bits <= 0) throw UsageError("ecc-mulmod needs --k and --order-bits");
    text = format_trace(ecc_mulmod_steps(number(a.k, "--k"), a.order_bits));
  } else {
    if (a.u.empty() || a.v.empty()) throw UsageError("--u and --v are required");
    const BranchTrace trace = run_victim(variant, number(a.u, "--u"), number(a.v, "--v"));
    if (a.kind == "branch") {
      text = format_trace(trace);
    } else if (a.kind == "weight") {
      text = format_trace(encode_weights(trace, profile_for(variant, opt(a.profile))));
    } else {
      throw UsageError("--kind must be branch or weight");
    }
  }
  emit(opt(a.out), text);
  return kOk;
}

int cmd_trace_encode(const TraceArgs& a) {
  const TraceFile file = read_trace_file(a.file);
  if (file.kind != TraceKind::Branch) throw UsageError(a.file + " is not a branch trace");
  emit(opt(a.out), format_trace(encode_weights(file.branch, profile_for(file.variant, opt(a.profile)))));
  return kOk;
}

int cmd_trace_decode(const TraceArgs& a) {
  const TraceFile file = read_trace_file(a.file);
  if (file.kind == TraceKind::Weight) {
    emit(opt(a.out), format_trace(decode_weights(file.weight, profile_for(file.variant, opt(a.profile)))));
  } else if (file.kind == TraceKind::Step) {
    std::ostringstream s;
    s << "z=" << decode_steps(file.step) << '\n';
    emit(opt(a.out), s.str());
  } else {
    throw UsageError(a.file + " is already a branch trace");
  }
  return kOk;
}

int cmd_trace_dump(const TraceArgs& a) {
  const TraceFile file = read_trace_file(a.file);
  std::ostringstream s;
  s << "variant=" << variant_id(file.variant) << " kind=";
  switch (file.kind) {
    case TraceKind::Branch:
      s << "branch count=" << file.branch.events.size() << '\n';
      for (std::size_t i = 0; i < file.branch.events.size(); ++i) {
        s << i << ' ' << event_name(file.branch.events[i]) << '\n';
      }
      break;
    case TraceKind::Weight:
      s << "weight count=" << file.weight.weights.size() << '\n';
      for (std::size_t i = 0; i < file.weight.weights.size(); ++i) s << i << ' ' << file.weight.weights[i] << '\n';
      break;
    case TraceKind::Step:
      s << "step count=" << file.step.steps.size() << '\n';
      for (std::size_t i = 0; i < file.step.steps.size(); ++i) {
        s << i << ' ' << file.step.steps[i] << ' '
          << (file.step.steps[i] == kDummyStepCount ? "DUMMY_STEP" : "REAL_STEP") << '\n';
      }
      break;
  }
  std::cout << s.str();
  return kOk;
}

int cmd_trace_replay(const TraceArgs& a) {
  const TraceFile file = read_trace_file(a.file);
  if (file.kind == TraceKind::Step) {
    if (a.k.empty()) throw UsageError("step traces replay with --k");
    const int bits = a.order_bits > 0 ? a.order_bits : static_cast<int>(file.step.steps.size());
    const StepTrace expected = ecc_mulmod_steps(number(a.k, "--k"), bits);
    const auto& got = file.step.steps;
    for (std::size_t i = 0; i < std::max(got.size(), expected.steps.size()); ++i) {
      if (i >= got.size() || i >= expected.steps.size() || got[i] != expected.steps[i]) {
        std::cout << "mismatch at event " << i << '\n';
        return kFailed;
      }
    }
    std::cout << "match events=" << got.size() << '\n';
    return kOk;
  }
  if (a.u.empty() || a.v.empty()) throw UsageError("--u and --v are required");
  const BranchTrace got = load_branch_trace(a.file, opt(a.profile));
  const BranchTrace expected = run_victim(got.variant, number(a.u, "--u"), number(a.v, "--v"));
  const std::size_t n = std::max(got.events.size(), expected.events.size());
  for (std::size_t i = 0; i < n; ++i) {
    const bool have_got = i < got.events.size(), have_exp = i < expected.events.size();
    if (have_got && have_exp && got.events[i] == expected.events[i]) continue;
    std::cout << "mismatch at event " << i << ": expected "
              << (have_exp ? std::string(event_name(expected.events[i])) : "END") << ", trace has "
              << (have_got ? std::string(event_name(got.events[i])) : "END") << '\n';
    return kFailed;
  }
  std::cout << "match events=" << got.events.size() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- recover

struct RecoverArgs {
  std::string trace, gcd_trace, fixture, samples, profile;
  std::string modulus, n, e, r;
  int l_max = 8;
  int z_min = 4;
  std::size_t batch = 0;
};

int cmd_recover_inverse(const RecoverArgs& a) {
  const BranchTrace trace = load_branch_trace(a.trace, opt(a.profile));
  const BigInt u = recover_unknown_operand(trace, number(a.modulus, "--modulus"));
  std::cout << "operand=" << to_decimal(u) << '\n';
  return kOk;
}

int cmd_recover_nonce(const std::string& scheme, const RecoverArgs& a) {
  const BranchTrace trace = load_branch_trace(a.trace, opt(a.profile));
  const auto records = load_fixtures(a.fixture);
  const std::string tag = scheme == "dsa" ? "DSA" : scheme == "ecdsa" ? "ECDSA" : "ELG";
  const FixtureRecord& key = find_record(records, tag, "key", a.fixture);
  const SignatureSample sig = signature_from_record(find_record(records, tag, "sig", a.fixture));
  BigInt k, x;
  bool verified = false;
  if (tag == "DSA") {
    const BigInt p = key.get("p"), n = key.get("n"), g = key.get("g");
    k = recover_unknown_operand(trace, n);
    x = dsa_key_from_nonce(sig, k, n);
    verified = powm(g, x, p) == key.get("y");
  } else if (tag == "ECDSA") {
    const Curve curve = ecdsa_key_from_record(key).curve;
    k = recover_unknown_operand(trace, curve.n);
    x = dsa_key_from_nonce(sig, k, curve.n);
    verified = ec_mul(curve, x, curve.g) == EcPoint{key.get("qx"), key.get("qy"), false};
  } else {
    const BigInt p = key.get("p"), g = key.get("g");
    k = recover_unknown_operand(trace, p - 1);
    x = elgamal_key_from_nonce(sig, k, p);
    verified = powm(g, x, p) == key.get("y");
  }
  std::cout << "k=" << to_decimal(k) << "\nkey=" << to_decimal(x) << "\nverified=" << (verified ? 1 : 0) << '\n';
  return verified ? kOk : kFailed;
}

int cmd_recover_rsa(const std::string& which, const RecoverArgs& a) {
  const BigInt n = number(a.n, "--n");
  const BranchTrace trace = load_branch_trace(a.trace, opt(a.profile));
  Factorization f;
  try {
    if (which == "rsa-crt") {
      f = recover_pq_from_crt_trace(trace, n);
    } else if (which == "rsa-x931") {
      f = recover_pq_from_gcd_trace(trace, n);
    } else if (which == "rsa-d") {
      const BigInt e = number(a.e, "--e");
      if (a.gcd_trace.empty() && a.r.empty()) {
        f = recover_pq_from_d_trace(trace, e, n, a.l_max);
      } else {
        std::optional<BranchTrace> g;
        if (!a.gcd_trace.empty()) g = load_branch_trace(a.gcd_trace, std::nullopt);
        std::optional<BigInt> r;
        if (!a.r.empty()) r = number(a.r, "--r");
        f = masked_d_attack(trace, g, e, r, n, a.l_max);
      }
    }
  } catch (const NotFoundError&) {
    f = Factorization{};
  }
  std::cout << factor_report(f);
  return f.factors ? kOk : kFailed;
}

int cmd_recover_lattice(const RecoverArgs& a) {
  const auto records = load_fixtures(a.fixture);
  const EcdsaKey key = [&] {
    const FixtureRecord& r = find_record(records, "ECDSA", "key", a.fixture);
    EcdsaKey k;
    k.curve = ecdsa_key_from_record(r).curve;
    k.q = EcPoint{r.get("qx"), r.get("qy"), false};
    return k;
  }();
  std::ifstream in(a.samples);
  if (!in) throw std::runtime_error("cannot open " + a.samples);
  const auto samples = read_lattice_samples(in);
  std::size_t batch = a.batch;
  if (batch == 0) {
    const auto b = lattice_batch_for(a.z_min);
    if (!b) throw UsageError("--batch is required for z_min outside 4..7");
    batch = *b;
  }
  const LatticeAttackResult r = recover_key_from_biased_nonces(samples, key.curve, key.q, a.z_min, batch);
  std::cout << "found=" << (r.d ? 1 : 0) << '\n';
  if (r.d) std::cout << "d=" << to_decimal(*r.d) << '\n';
  std::cout << "used_samples=" << r.used_samples << "\ndimension=" << r.dimension
            << "\nfloat_iterations=" << r.lll.float_iterations << "\nexact_swaps=" << r.lll.exact_swaps
            << "\nlll_seconds=" << r.lll.seconds << '\n';
  return r.d ? kOk : kFailed;
}

// ---------------------------------------------------------------- fixture

struct FixtureArgs {
  std::string scheme;
  std::size_t bits = 0;
  std::uint64_t seed = 1;
  std::size_t signatures = 0;
  std::string curve;
  int z_min = 4;
  std::size_t batch = 0;
  std::string samples_out;
  std::string out;
};

int cmd_fixture(const FixtureArgs& a) {
  std::vector<FixtureRecord> records;
  Rng rng(derive_seed(a.seed, 1000));
  if (a.scheme == "rsa") {
    records.push_back(to_record(rsa_keygen(a.bits ? a.bits : 256, 65537, a.seed)));
  } else if (a.scheme == "dsa") {
    const std::size_t order = a.bits ? a.bits : 160;
    const DsaKey key = dsa_keygen(dsa_paramgen(order == 160 ? 1024 : std::max<std::size_t>(4 * order, 64), order, a.seed),
                                  derive_seed(a.seed, 1));
    records.push_back(to_record(key));
    for (std::size_t i = 0; i < a.signatures; ++i) {
      records.push_back(to_record("DSA", dsa_sign(key, rng.below(key.params.n), std::nullopt, derive_seed(a.seed, 10 + i))));
    }
  } else if (a.scheme == "ecdsa") {
    const EcdsaKey key = ecdsa_keygen(curve_by_name(a.curve.empty() ? "toy" : a.curve), a.seed);
    records.push_back(to_record(key));
    for (std::size_t i = 0; i < a.signatures; ++i) {
      records.push_back(to_record("ECDSA", ecdsa_sign(key, rng.below(key.curve.n), std::nullopt, derive_seed(a.seed, 10 + i))));
    }
    if (!a.samples_out.empty()) {
      std::size_t batch = a.batch;
      if (batch == 0) batch = lattice_batch_for(a.z_min).value_or(0);
      if (batch == 0) throw UsageError("--batch is required for z_min outside 4..7");
      const BiasedStream stream =
          collect_biased_signatures(key, a.z_min, batch, (3 * batch << a.z_min) / 2, derive_seed(a.seed, 2));
      std::ostringstream s;
      write_lattice_samples(s, stream.filtered);
      write_text_file(a.samples_out, s.str());
    }
  } else if (a.scheme == "elgamal") {
    const ElGamalKey key = elgamal_keygen(a.bits ? a.bits : 256, a.seed);
    records.push_back(to_record(key));
    for (std::size_t i = 0; i < a.signatures; ++i) {
      records.push_back(to_record("ELG", elgamal_sign(key, rng.below(key.p - 1), std::nullopt, derive_seed(a.seed, 10 + i))));
    }
  } else {
    throw UsageError("--scheme must be rsa, dsa, ecdsa or elgamal");
  }
  std::ostringstream s;
  write_fixtures(s, records);
  emit(opt(a.out), s.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"copycat: controlled-channel trace simulation and single-trace key recovery"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run repeated end-to-end attack trials and print a report");
  run->add_option("--attack", run_args.attack,
                  "dsa-single, ecdsa-single, elgamal-single, rsa-crt, rsa-d, rsa-x931, ecdsa-lattice")
      ->required();
  run->add_option("--bits", run_args.bits, "Key or group-order size (0 = attack default)");
  run->add_option("--trials", run_args.trials, "Number of trials");
  run->add_option("--seed", run_args.seed, "Master seed");
  run->add_option("--variant", run_args.variant, "Victim variant id");
  run->add_option("--profile", run_args.profile, "Channel profile preset or file");
  run->add_option("--curve", run_args.curve, "ECDSA curve: toy, brainpoolP160r1, p256");
  run->add_option("--l-max", run_args.l_max, "Largest gcd exponent tried by rsa-d");
  run->add_option("--z-min", run_args.z_min, "Leading-zero filter for ecdsa-lattice");
  run->add_option("--batch", run_args.batch, "Filtered samples per lattice (0 = default for z-min)");
  run->add_option("--jobs", run_args.jobs, "Worker threads");
  run->add_option("--out", run_args.out, "Also write the report to this file");
  run->add_flag("--report-only", run_args.report_only, "Exit 0 even when trials fail");

  auto* trace = app.add_subcommand("trace", "Generate, convert, inspect and replay trace files");
  trace->require_subcommand(1);
  TraceArgs ta;
  auto* gen = trace->add_subcommand("gen", "Run a victim and write its trace");
  gen->add_option("--victim", ta.victim, "Variant id")->required();
  gen->add_option("--u", ta.u, "First operand");
  gen->add_option("--v", ta.v, "Second operand (modulus)");
  gen->add_option("--k", ta.k, "Scalar for ecc-mulmod");
  gen->add_option("--order-bits", ta.order_bits, "Group order bits for ecc-mulmod");
  gen->add_option("--kind", ta.kind, "branch or weight");
  gen->add_option("--profile", ta.profile, "Channel profile preset or file");
  gen->add_option("--out", ta.out, "Output file (default stdout)");
  auto* encode = trace->add_subcommand("encode", "Branch trace to weight trace");
  auto* decode = trace->add_subcommand("decode", "Weight trace to branch trace (step trace to z)");
  auto* dump = trace->add_subcommand("dump", "Print a trace in readable form");
  auto* replay = trace->add_subcommand("replay", "Check a trace against a victim re-execution");
  for (auto* sub : {encode, decode, dump, replay}) sub->add_option("file", ta.file, "Trace file")->required();
  for (auto* sub : {encode, decode, replay}) sub->add_option("--profile", ta.profile, "Channel profile preset or file");
  for (auto* sub : {encode, decode}) sub->add_option("--out", ta.out, "Output file (default stdout)");
  replay->add_option("--u", ta.u, "First operand");
  replay->add_option("--v", ta.v, "Second operand");
  replay->add_option("--k", ta.k, "Scalar for step traces");
  replay->add_option("--order-bits", ta.order_bits, "Group order bits for step traces");

  auto* recover = app.add_subcommand("recover", "Recover secrets from trace files");
  recover->require_subcommand(1);
  RecoverArgs ra;
  auto* r_inv = recover->add_subcommand("inverse", "Unknown operand of an inversion with public modulus");
  r_inv->add_option("--modulus", ra.modulus, "Public modulus")->required();
  std::vector<CLI::App*> nonce_cmds;
  for (const char* s : {"dsa", "ecdsa", "elgamal"}) {
    auto* c = recover->add_subcommand(s, std::string("Nonce and key from one inversion trace (") + s + ")");
    c->add_option("--fixture", ra.fixture, "Fixture file with the public key and the signature")->required();
    nonce_cmds.push_back(c);
  }
  std::vector<CLI::App*> rsa_cmds;
  for (const char* s : {"rsa-crt", "rsa-d", "rsa-x931"}) {
    auto* c = recover->add_subcommand(s, std::string("Factor N from one key-generation trace (") + s + ")");
    c->add_option("--n", ra.n, "Public modulus")->required();
    rsa_cmds.push_back(c);
  }
  rsa_cmds[1]->add_option("--e", ra.e, "Public exponent")->required();
  rsa_cmds[1]->add_option("--l-max", ra.l_max, "Largest gcd exponent tried");
  rsa_cmds[1]->add_option("--gcd-trace", ra.gcd_trace, "bgcd(r, lambda) trace for a masked exponent");
  rsa_cmds[1]->add_option("--r", ra.r, "Known mask r");
  std::vector<CLI::App*> trace_cmds = {r_inv};
  trace_cmds.insert(trace_cmds.end(), nonce_cmds.begin(), nonce_cmds.end());
  trace_cmds.insert(trace_cmds.end(), rsa_cmds.begin(), rsa_cmds.end());
  for (auto* c : trace_cmds) {
    c->add_option("--trace", ra.trace, "Branch or weight trace file")->required();
    c->add_option("--profile", ra.profile, "Channel profile for weight traces");
  }
  auto* r_lat = recover->add_subcommand("lattice", "ECDSA key from z-annotated signatures");
  r_lat->add_option("--samples", ra.samples, "Lattice sample file (r s h z per line)")->required();
  r_lat->add_option("--fixture", ra.fixture, "Fixture file with the ECDSA public key")->required();
  r_lat->add_option("--z-min", ra.z_min, "Leading-zero filter");
  r_lat->add_option("--batch", ra.batch, "Samples per lattice (0 = default for z-min)");

  FixtureArgs fa;
  auto* fixture = app.add_subcommand("fixture", "Generate keys and signatures with ground truth");
  fixture->add_option("--scheme", fa.scheme, "rsa, dsa, ecdsa or elgamal")->required();
  fixture->add_option("--bits", fa.bits, "Key size (0 = default)");
  fixture->add_option("--seed", fa.seed, "Seed");
  fixture->add_option("--signatures", fa.signatures, "Signatures to append");
  fixture->add_option("--curve", fa.curve, "ECDSA curve");
  fixture->add_option("--z-min", fa.z_min, "Filter for --samples-out");
  fixture->add_option("--batch", fa.batch, "Filtered samples for --samples-out");
  fixture->add_option("--samples-out", fa.samples_out, "Also write a z-filtered lattice sample file");
  fixture->add_option("--out", fa.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (gen->parsed()) return cmd_trace_gen(ta);
    if (encode->parsed()) return cmd_trace_encode(ta);
    if (decode->parsed()) return cmd_trace_decode(ta);
    if (dump->parsed()) return cmd_trace_dump(ta);
    if (replay->parsed()) return cmd_trace_replay(ta);
    if (r_inv->parsed()) return cmd_recover_inverse(ra);
    for (auto* c : nonce_cmds) {
      if (c->parsed()) return cmd_recover_nonce(c->get_name(), ra);
    }
    for (auto* c : rsa_cmds) {
      if (c->parsed()) return cmd_recover_rsa(c->get_name(), ra);
    }
    if (r_lat->parsed()) return cmd_recover_lattice(ra);
    if (fixture->parsed()) return cmd_fixture(fa);
  } catch (const NoSolutionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  } catch (const DecodeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
