#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anisoeig {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed expression source; offset is the byte position of the problem.
struct ParseError : Error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : Error(msg + " (at offset " + std::to_string(off) + ")"), offset(off) {}
};

// Bad scenario file; line is 1-based.
struct ConfigError : Error {
  int line;
  ConfigError(const std::string& msg, int ln = 0)
      : Error(ln > 0 ? msg + " (line " + std::to_string(ln) + ")" : msg), line(ln) {}
};

// Violated precondition on an API call.
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

// Runtime numerical failure: singular evaluation, solver breakdown,
// ellipticity or boundary-flux violation, starved particle ensemble.
struct NumericalError : Error {
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace anisoeig
