#pragma once

#include <stdexcept>
#include <string>

namespace fgnn {

// Base of every error thrown by the library. The CLI maps subclasses onto
// process exit codes (usage -> 2, data/integrity -> 3, numerical check -> 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An index (item, node, row, label) falls outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// A precondition on the call itself was violated (e.g. non-scalar loss).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Bad user-facing parameters: unknown format tags, out-of-range fractions,
// malformed config values.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Input data is empty or unusable after processing.
class DataError : public Error {
 public:
  using Error::Error;
};

// A persisted file is truncated, corrupt or internally inconsistent.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace fgnn
