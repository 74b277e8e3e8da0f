#pragma once

#include <stdexcept>
#include <string>

namespace netsurv {

/// Base class for every error raised by the toolkit. The CLI prints `what()`
/// verbatim, so messages should name the offending column, row, group or
/// stratum.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Input file does not match the documented schema (missing column, bad header).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Row-level data problem (non-positive weight, death after interview, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A function was called with arguments outside its domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration (JSON config, known-population table, simulator settings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A demographic group has no respondents / no exposure.
class EmptyCellError : public Error {
 public:
  EmptyCellError(std::string group, const std::string& what)
      : Error("empty cell for group " + group + ": " + what), group_(std::move(group)) {}
  const std::string& group() const noexcept { return group_; }

 private:
  std::string group_;
};

/// The estimated visibility (average degree) of a group is zero, so the
/// number of deaths cannot be recovered from reports.
class DegenerateVisibilityError : public Error {
 public:
  explicit DegenerateVisibilityError(std::string group)
      : Error("degenerate visibility for group " + group + ": estimated average degree is zero"),
        group_(std::move(group)) {}
  const std::string& group() const noexcept { return group_; }

 private:
  std::string group_;
};

/// Survey design cannot support the requested variance method.
class DesignError : public Error {
 public:
  using Error::Error;
};

/// Rate schedule does not cover the requested age range.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

}  // namespace netsurv
