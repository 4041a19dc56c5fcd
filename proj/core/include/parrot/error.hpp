// Copyright 2026 The Parrot-Toy Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace parrot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or widths.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Token id, class id or target index outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Violated call contract (non-scalar loss, reused tape, bad argument).
class ContractError : public Error {
 public:
  using Error::Error;
};

// File missing or unreadable/unwritable.
class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed corpus / log record. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Operation invoked in the wrong lifecycle state (e.g. stage 2 before MoE init).
class StateError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

// Requested dataset does not fit the vocabulary layout.
class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace parrot
