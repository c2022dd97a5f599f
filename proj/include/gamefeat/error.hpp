#pragma once

#include <stdexcept>
#include <string>

namespace gamefeat {

/// Base of every error the engine throws. Fatal conditions (bad files,
/// duplicate ids, programming errors) and the typed non-fatal outcomes
/// callers are expected to surface (no usable nouns, no candidates) all
/// derive from it so the CLI and service can map them to exit codes and
/// HTTP statuses in one place.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unparseable or inconsistent input file. `line` is 1-based, 0 if unknown.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0, std::size_t offset = 0)
      : Error(what), line_(line), offset_(offset) {}

  std::size_t line() const { return line_; }
  std::size_t offset() const { return offset_; }

 private:
  std::size_t line_;
  std::size_t offset_;
};

class NoUsableNouns : public Error {
 public:
  NoUsableNouns() : Error("prompt has no nouns with embedding vectors") {}
};

class NoCandidates : public Error {
 public:
  using Error::Error;
  NoCandidates() : Error("generator produced no candidates") {}
};

/// Network failure that survived the bounded retry budget.
class RetryableError : public Error {
 public:
  using Error::Error;
};

/// Remote answered, but not in the expected shape.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A generator or backend the caller asked for is not configured.
class Unavailable : public Error {
 public:
  using Error::Error;
};

/// Lookup of a session, bundle or similar by id failed.
class NotFound : public Error {
 public:
  using Error::Error;
};

}  // namespace gamefeat
