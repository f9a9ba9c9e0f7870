#pragma once

#include <stdexcept>
#include <string>

namespace patchselect {

// Base for every error the library raises. Subclasses name the failure class
// so callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MarginViolation : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class DegenerateData : public Error {
 public:
  using Error::Error;
};

class KindMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyClass : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

}  // namespace patchselect
