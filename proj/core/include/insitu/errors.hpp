#pragma once

#include <stdexcept>
#include <string>

namespace insitu {

// Base of every error thrown by the library. Subclasses name the failure
// family so callers (the CLI in particular) can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class LayoutError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Anything that goes wrong on the instrument side of the black-box boundary.
class InstrumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace insitu
