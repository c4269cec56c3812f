#pragma once

#include <stdexcept>
#include <string>

namespace center3d {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. `field()` is the 1-based field index, or 0 when the
/// error is not tied to a single field.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, int field = 0)
      : Error(what), field_(field) {}
  int field() const noexcept { return field_; }

 private:
  int field_;
};

/// A value falls outside the domain of a codec or configuration.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Projection or back-projection is undefined for the given input.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Missing files, mismatched frame sets, schema violations.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace center3d
