#pragma once

#include <stdexcept>
#include <string>

namespace hrecon {

// Base for every failure raised by the library. The subclasses map onto the
// CLI exit statuses (usage 1, data 2, numerical 3).
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments, inconsistent configuration, out-of-range parameters.
class ConfigError : public Error
{
public:
  using Error::Error;
};

// Malformed files, shape mismatches between inputs, non-finite input data.
class DataError : public Error
{
public:
  using Error::Error;
};

// Failures that happen while computing: SVD non-convergence, NaN during
// sampling, score provider faults.
class NumericalError : public Error
{
public:
  using Error::Error;
};

} // namespace hrecon

namespace hrecon {

// Structured failure from the binary file readers.
class FormatError : public DataError
{
public:
  enum class Kind
  {
    BadMagic,
    Truncated,
    DimensionOverflow,
    TrailingBytes,
    BadValue,
  };

  FormatError(Kind kind, std::string const &what)
    : DataError(what)
    , kind_{kind}
  {
  }

  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

} // namespace hrecon
