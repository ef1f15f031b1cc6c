#pragma once

#include <stdexcept>
#include <string>

namespace relforge {

// Bad input data: malformed files, unknown ids, inconsistent tables.
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Caller broke an API precondition (shape mismatch, label out of range).
// The CLI maps this to exit code 3.
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace relforge
