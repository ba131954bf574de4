#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tim {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Schema/config problems: missing columns, unknown roles, bad keys.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Cell-level input violations. Carries the offending 1-based data rows.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::vector<std::size_t> rows = {})
      : Error(what), rows_(std::move(rows)) {}

  const std::vector<std::size_t>& rows() const noexcept { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

// Structurally valid input on which the method has nothing to work with
// (no treated units, no matched strata, ...).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

// Estimation impossible on the matched sample (e.g. no matched strata).
class EstimationError : public DegenerateDataError {
 public:
  using DegenerateDataError::DegenerateDataError;
};

}  // namespace tim
