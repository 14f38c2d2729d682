#pragma once

#include <stdexcept>
#include <string>

namespace fairdiff {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Schema inconsistencies and values that do not fit the schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Malformed input text (CSV cells, config files).
class ParseError : public Error {
 public:
  using Error::Error;
};

class EmptyTableError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or divergence during gradient training.
class NumericalFault : public Error {
 public:
  using Error::Error;
};

class CorruptFileError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

// A (group, label) cell needed for reweighing is empty.
class DegenerateGroupError : public Error {
 public:
  using Error::Error;
};

// The evaluation split lacks one of the two protected groups.
class GroupAbsentError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairdiff
