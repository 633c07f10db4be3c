#pragma once

#include <stdexcept>
#include <string>

namespace robohead {

// Base of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidCommand : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration (head config, AU definitions, model kinds).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Malformed input files. Data-level failures map to CLI exit code 2.
class FormatError : public Error {
 public:
  using Error::Error;
};

class CorruptionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedVersion : public FormatError {
 public:
  using FormatError::FormatError;
};

class AlignmentDegenerate : public Error {
 public:
  using Error::Error;
};

class SingularFit : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

class CalibrationRequired : public Error {
 public:
  using Error::Error;
};

}  // namespace robohead
