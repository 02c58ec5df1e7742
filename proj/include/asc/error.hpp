#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace asc {

// Base for every failure the toolkit reports. Callers that only want a
// message can catch this; commands map it to a nonzero exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A line of an interchange file could not be decoded.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + ", field '" + field + "': " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// A record decoded fine but breaks a data-model invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::string snippet_id, std::string rule, const std::string& detail)
      : Error("snippet '" + snippet_id + "': " + rule + (detail.empty() ? "" : " (" + detail + ")")),
        snippet_id_(std::move(snippet_id)),
        rule_(std::move(rule)) {}

  const std::string& snippet_id() const noexcept { return snippet_id_; }
  const std::string& rule() const noexcept { return rule_; }

 private:
  std::string snippet_id_;
  std::string rule_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  EncodingError(std::size_t offset, const std::string& what)
      : Error("invalid UTF-8 at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

// Undefined statistic: zero variance, no scored tokens, singular design.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace asc
