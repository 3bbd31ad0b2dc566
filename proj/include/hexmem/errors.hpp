#pragma once

#include <stdexcept>
#include <string>

namespace hexmem {

// Argument outside the mathematical domain of an operation (bad cell index,
// task size out of bounds, score outside [0, 1]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Inconsistent or unusable configuration (weights not summing to one,
// fingerprint mismatch, missing policy).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation invoked in the wrong lifecycle state (empty database, exhausted
// episode).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed player input: duplicate clicks, wrong click count.
class ProtocolError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numeric fault during training (non-finite loss or network output).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or incompatible file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hexmem
