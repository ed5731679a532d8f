#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qscrack {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/// The crack tip (or a queried abscissa) is not a mesh vertex on the crack path.
struct MeshConformityError : Error
{
  using Error::Error;
};

/// Invalid physical or numerical parameter, bad config text.
struct ConfigError : Error
{
  ConfigError(std::string key, const std::string& what)
    : Error(key.empty() ? what : key + ": " + what), key_(std::move(key))
  {}

  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

/// Conjugate gradient hit the iteration cap.
struct SolverError : Error
{
  SolverError(const std::string& what, double residual, std::size_t iterations)
    : Error(what), residual(residual), iterations(iterations)
  {}

  double residual;
  std::size_t iterations;
};

/// The cohesive-zone search could not find any admissible endpoint.
struct FeasibilityError : Error
{
  using Error::Error;
};

} // namespace qscrack
