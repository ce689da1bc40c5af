#pragma once

#include <stdexcept>
#include <string>

namespace homsim {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid physical parameter or configuration value.
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Malformed input data (tag files, histograms, streams). Carries an
/// optional 1-based line number for file diagnostics.
class DataError : public Error {
public:
  explicit DataError(const std::string& what, long line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const { return line_; }

private:
  long line_ = 0;
};

/// Numerical accuracy contract violated (integration drift, quadrature
/// that fails to converge under refinement).
class AccuracyError : public Error {
public:
  using Error::Error;
};

/// Fit could not be performed (degenerate data, unresolved decay).
class FitError : public Error {
public:
  using Error::Error;
};

/// Query outside a tabulated range; no silent extrapolation.
class RangeError : public Error {
public:
  using Error::Error;
};

/// A statistical self-test (simulation vs theory) failed.
class SelfTestError : public Error {
public:
  using Error::Error;
};

} // namespace homsim
