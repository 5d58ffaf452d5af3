#pragma once

#include <stdexcept>
#include <string>

namespace qreason {

// Precondition violations on public operations.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Failures that surface while running (I/O, malformed files, diverging training).
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qreason
