#pragma once

#include <stdexcept>
#include <string>

namespace absa {

/// File not found, unreadable, unwritable. CLI exit code 1.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input content (XML, TSV, JSONL, config). CLI exit code 2.
/// Argument/contract violations use std::invalid_argument (also exit 2).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, long line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")"
                                     : what),
        line_(line) {}

  long line() const { return line_; }

 private:
  long line_;
};

/// The selected backend or annotator cannot perform the requested
/// operation (e.g. training on an inference-only backend). CLI exit code 3.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace absa
