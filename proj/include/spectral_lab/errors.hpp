#pragma once

#include <stdexcept>
#include <string>

namespace spectral_lab {

/// Invalid argument or violated precondition (r <= 0, negative weight, ...).
class DomainError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Adaptive quadrature did not reach its tolerance; the message carries the
/// worst remaining intervals.
class QuadratureError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Two atoms match a query within the matching tolerance.
class AmbiguityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Pairing of a measure with a test function (or a total mass) diverges.
class DivergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A fit could not be carried out on the supplied data.
class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A proved bound was violated by the numerics; always a pipeline bug.
class InconsistencyError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Malformed configuration / measure file.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace spectral_lab
