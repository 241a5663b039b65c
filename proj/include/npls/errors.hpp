#pragma once

#include <stdexcept>
#include <string>

namespace npls {

// Invalid user-supplied configuration or operation preconditions. CLI exit code 2.
class InvalidInput : public std::runtime_error {
public:
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

// File and format errors. CLI exit code 3.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure the algorithms cannot recover from. CLI exit code 4.
class NumericalFailure : public std::runtime_error {
public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace npls
