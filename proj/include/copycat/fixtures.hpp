#pragma once

// Line-oriented fixture format:
//
//   <TAG> <key|sig> name=value name=value ...
//
// TAG is one of RSA, DSA, ECDSA, ELG; values are decimal integers except the
// ECDSA `curve` field, which holds a curve name. Blank lines and lines
// starting with '#' are skipped.

#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "copycat/schemes.hpp"

namespace copycat {

struct FixtureRecord {
  std::string tag;
  std::string kind;  // "key" or "sig"
  std::vector<std::pair<std::string, std::string>> fields;

  bool has(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  BigInt get(const std::string& name) const;
  void set(const std::string& name, const BigInt& value);
  void set_text(const std::string& name, const std::string& value);
};

std::string format_fixture(const FixtureRecord& record);
FixtureRecord parse_fixture_line(const std::string& line, std::size_t line_no = 1);
std::vector<FixtureRecord> read_fixtures(std::istream& in);
void write_fixtures(std::ostream& out, const std::vector<FixtureRecord>& records);

FixtureRecord to_record(const RsaKey& key);
FixtureRecord to_record(const DsaKey& key);
FixtureRecord to_record(const EcdsaKey& key);
FixtureRecord to_record(const ElGamalKey& key);
// `tag` selects DSA, ECDSA or ELG; ground-truth fields are written when set.
FixtureRecord to_record(const std::string& tag, const SignatureSample& sig);

RsaKey rsa_key_from_record(const FixtureRecord& record);
DsaKey dsa_key_from_record(const FixtureRecord& record);
EcdsaKey ecdsa_key_from_record(const FixtureRecord& record);
ElGamalKey elgamal_key_from_record(const FixtureRecord& record);
SignatureSample signature_from_record(const FixtureRecord& record);

// Lattice sample files: one "r s h z" line per signature.
std::vector<SignatureSample> read_lattice_samples(std::istream& in);
void write_lattice_samples(std::ostream& out, const std::vector<SignatureSample>& samples);

}  // namespace copycat
