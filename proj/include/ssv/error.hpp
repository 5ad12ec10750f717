#pragma once

#include <stdexcept>
#include <string>

namespace ssv {

// All toolkit failures derive from Error. The module tag lets the CLI report
// where a problem originated ("embedding-store: line 3: ...").
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// Malformed file contents or tokens.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Inputs that parse but violate a precondition (dim mismatch, missing id...).
class DataError : public Error {
 public:
  using Error::Error;
};

// A trial request that cannot be satisfied by the manifest.
class InfeasibleError : public Error {
 public:
  InfeasibleError(int scenario, std::size_t max_feasible, const std::string& message)
      : Error("trial-protocol", message), scenario_(scenario), max_feasible_(max_feasible) {}

  int scenario() const noexcept { return scenario_; }
  std::size_t max_feasible() const noexcept { return max_feasible_; }

 private:
  int scenario_;
  std::size_t max_feasible_;
};

}  // namespace ssv
