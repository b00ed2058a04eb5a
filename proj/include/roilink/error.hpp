#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace roilink {

// Base of every error the library throws on a contract violation.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value (threshold out of range, bad grid spec, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Geometry precondition failed, e.g. a zero-area ground-truth box.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class SelectionError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `record` names the offending entry when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string record = {})
      : Error(record.empty() ? what : what + " (" + record + ")"),
        record_(std::move(record)) {}

  const std::string& record() const noexcept { return record_; }

 private:
  std::string record_;
};

}  // namespace roilink
