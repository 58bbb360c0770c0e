#pragma once

#include <stdexcept>
#include <string>

namespace domslam {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The rotation angle of a pose is pi, where the logarithm is not unique.
class NonUniqueLogError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent graph construction (dangling id, duplicate id, missing anchor).
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Malformed graph file. Carries the 1-based line number of the offending record.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what, const std::string& source = "")
      : Error((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ": " + what),
        line_(line),
        detail_(what) {}

  int line() const { return line_; }
  const std::string& detail() const { return detail_; }

 private:
  int line_;
  std::string detail_;
};

class MetricsError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace domslam
