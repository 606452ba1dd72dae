#pragma once

#include <stdexcept>
#include <string>

namespace gridvad {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Raised by partition() when the clip has fewer frames than grid cells.
class ClipTooShort : public Error {
 public:
  ClipTooShort() : Error("clip shorter than grid") {}
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

// A backend answered, but the answer breaks the wire contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class GroundingFailed : public Error {
 public:
  using Error::Error;
};

class PropagationFailed : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Manifest or scenario file does not match its schema; the message names the field.
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace gridvad
