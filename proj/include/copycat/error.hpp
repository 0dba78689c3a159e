#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace copycat {

// Precondition on an operation's inputs was violated (even RSA exponent,
// even modulus for the compact inverse, k = 0 for the step model, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoInverseError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Weight or step trace that cannot be mapped back to branch events.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A branch trace contradicts every candidate value of the unknown operand.
class NoSolutionError : public std::runtime_error {
 public:
  NoSolutionError(const std::string& what, std::size_t event_index)
      : std::runtime_error(what + " at event " + std::to_string(event_index)),
        event_index_(event_index) {}
  std::size_t event_index() const { return event_index_; }

 private:
  std::size_t event_index_;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace copycat
