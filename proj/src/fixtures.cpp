#include "copycat/fixtures.hpp"

#include <sstream>

#include "copycat/error.hpp"

namespace copycat {
namespace {

bool skippable(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

void expect_tag(const FixtureRecord& r, const std::string& tag, const std::string& kind) {
  if (r.tag != tag || r.kind != kind) {
    throw ParseError("expected " + tag + " " + kind + ", got " + r.tag + " " + r.kind, 0);
  }
}

BigInt parse_int(const std::string& text, std::size_t line_no) {
  try {
    return from_decimal(text);
  } catch (const std::invalid_argument&) {
    throw ParseError("bad integer '" + text + "'", line_no);
  }
}

}  // namespace

bool FixtureRecord::has(const std::string& name) const {
  for (const auto& [k, v] : fields) {
    if (k == name) return true;
  }
  return false;
}

const std::string& FixtureRecord::text(const std::string& name) const {
  for (const auto& [k, v] : fields) {
    if (k == name) return v;
  }
  throw ParseError(tag + " record lacks field '" + name + "'", 0);
}

BigInt FixtureRecord::get(const std::string& name) const { return parse_int(text(name), 0); }

void FixtureRecord::set(const std::string& name, const BigInt& value) {
  set_text(name, to_decimal(value));
}

void FixtureRecord::set_text(const std::string& name, const std::string& value) {
  for (auto& [k, v] : fields) {
    if (k == name) {
      v = value;
      return;
    }
  }
  fields.emplace_back(name, value);
}

std::string format_fixture(const FixtureRecord& record) {
  std::string line = record.tag + " " + record.kind;
  for (const auto& [k, v] : record.fields) line += " " + k + "=" + v;
  return line;
}

FixtureRecord parse_fixture_line(const std::string& line, std::size_t line_no) {
  std::istringstream in(line);
  FixtureRecord r;
  if (!(in >> r.tag >> r.kind)) throw ParseError("truncated fixture line", line_no);
  if (r.tag != "RSA" && r.tag != "DSA" && r.tag != "ECDSA" && r.tag != "ELG") {
    throw ParseError("unknown tag '" + r.tag + "'", line_no);
  }
  if (r.kind != "key" && r.kind != "sig") throw ParseError("unknown kind '" + r.kind + "'", line_no);
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("bad field '" + token + "'", line_no);
    std::string name = token.substr(0, eq);
    std::string value = token.substr(eq + 1);
    if (name != "curve") parse_int(value, line_no);
    r.set_text(name, value);
  }
  return r;
}

std::vector<FixtureRecord> read_fixtures(std::istream& in) {
  std::vector<FixtureRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    out.push_back(parse_fixture_line(line, line_no));
  }
  return out;
}

void write_fixtures(std::ostream& out, const std::vector<FixtureRecord>& records) {
  for (const auto& r : records) out << format_fixture(r) << '\n';
}

FixtureRecord to_record(const RsaKey& key) {
  FixtureRecord r{"RSA", "key", {}};
  r.set("p", key.p);
  r.set("q", key.q);
  r.set("N", key.n);
  r.set("e", key.e);
  r.set("d", key.d);
  r.set("lambda", key.lambda);
  r.set("dP", key.d_p);
  r.set("dQ", key.d_q);
  r.set("qInv", key.q_inv);
  return r;
}

FixtureRecord to_record(const DsaKey& key) {
  FixtureRecord r{"DSA", "key", {}};
  r.set("p", key.params.p);
  r.set("n", key.params.n);
  r.set("g", key.params.g);
  r.set("x", key.x);
  r.set("y", key.y);
  return r;
}

FixtureRecord to_record(const EcdsaKey& key) {
  FixtureRecord r{"ECDSA", "key", {}};
  r.set_text("curve", key.curve.name);
  r.set("p", key.curve.p);
  r.set("a", key.curve.a);
  r.set("b", key.curve.b);
  r.set("gx", key.curve.g.x);
  r.set("gy", key.curve.g.y);
  r.set("n", key.curve.n);
  r.set("d", key.d);
  r.set("qx", key.q.x);
  r.set("qy", key.q.y);
  return r;
}

FixtureRecord to_record(const ElGamalKey& key) {
  FixtureRecord r{"ELG", "key", {}};
  r.set("p", key.p);
  r.set("g", key.g);
  r.set("x", key.x);
  r.set("y", key.y);
  return r;
}

FixtureRecord to_record(const std::string& tag, const SignatureSample& sig) {
  FixtureRecord r{tag, "sig", {}};
  r.set("r", sig.r);
  r.set("s", sig.s);
  r.set("h", sig.h);
  if (sig.k) r.set("k", *sig.k);
  if (sig.blinding) r.set("b", *sig.blinding);
  if (sig.z) r.set("z", *sig.z);
  return r;
}

RsaKey rsa_key_from_record(const FixtureRecord& record) {
  expect_tag(record, "RSA", "key");
  RsaKey key = rsa_key_from_primes(record.get("p"), record.get("q"), record.get("e"));
  if (record.has("N") && record.get("N") != key.n) throw ParseError("RSA N != p*q", 0);
  if (record.has("d") && record.get("d") != key.d) throw ParseError("RSA d inconsistent", 0);
  return key;
}

DsaKey dsa_key_from_record(const FixtureRecord& record) {
  expect_tag(record, "DSA", "key");
  DsaParams params{record.get("p"), record.get("n"), record.get("g")};
  DsaKey key = dsa_key_from_secret(params, record.get("x"));
  if (record.has("y") && record.get("y") != key.y) throw ParseError("DSA y != g^x", 0);
  return key;
}

EcdsaKey ecdsa_key_from_record(const FixtureRecord& record) {
  expect_tag(record, "ECDSA", "key");
  Curve curve;
  curve.name = record.has("curve") ? record.text("curve") : "custom";
  curve.p = record.get("p");
  curve.a = record.get("a");
  curve.b = record.get("b");
  curve.g = EcPoint{record.get("gx"), record.get("gy"), false};
  curve.n = record.get("n");
  EcdsaKey key = ecdsa_key_from_secret(curve, record.get("d"));
  if (record.has("qx") && (record.get("qx") != key.q.x || record.get("qy") != key.q.y)) {
    throw ParseError("ECDSA Q != dG", 0);
  }
  return key;
}

ElGamalKey elgamal_key_from_record(const FixtureRecord& record) {
  expect_tag(record, "ELG", "key");
  ElGamalKey key = elgamal_key_from_secret(record.get("p"), record.get("g"), record.get("x"));
  if (record.has("y") && record.get("y") != key.y) throw ParseError("ElGamal y != g^x", 0);
  return key;
}

SignatureSample signature_from_record(const FixtureRecord& record) {
  if (record.kind != "sig") throw ParseError("expected a sig record", 0);
  SignatureSample sig;
  sig.r = record.get("r");
  sig.s = record.get("s");
  sig.h = record.get("h");
  if (record.has("k")) sig.k = record.get("k");
  if (record.has("b")) sig.blinding = record.get("b");
  if (record.has("z")) sig.z = static_cast<int>(record.get("z").get_si());
  return sig;
}

std::vector<SignatureSample> read_lattice_samples(std::istream& in) {
  std::vector<SignatureSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    std::istringstream fields(line);
    std::string r, s, h, z, extra;
    if (!(fields >> r >> s >> h >> z) || (fields >> extra)) {
      throw ParseError("expected 'r s h z'", line_no);
    }
    SignatureSample sig;
    sig.r = parse_int(r, line_no);
    sig.s = parse_int(s, line_no);
    sig.h = parse_int(h, line_no);
    const BigInt zv = parse_int(z, line_no);
    if (zv < 0 || zv > 4096) throw ParseError("z out of range", line_no);
    sig.z = static_cast<int>(zv.get_si());
    out.push_back(std::move(sig));
  }
  return out;
}

void write_lattice_samples(std::ostream& out, const std::vector<SignatureSample>& samples) {
  for (const auto& s : samples) {
    out << to_decimal(s.r) << ' ' << to_decimal(s.s) << ' ' << to_decimal(s.h) << ' '
        << (s.z ? *s.z : 0) << '\n';
  }
}

}  // namespace copycat
