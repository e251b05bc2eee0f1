#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mvshrink {

// Error taxonomy shared by the library and the command line tool.
// Each error carries a short machine-readable name next to the human message;
// the CLI maps the three categories onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// Bad arguments, malformed configuration, contract violations by the caller.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Degenerate numerics: singular systems, guard-band concentrations,
// undefined calibrations. The inputs were well formed but the math refuses.
class NumericError : public Error {
 public:
  using Error::Error;
};

// File system and parsing failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvshrink
