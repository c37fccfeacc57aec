#pragma once

#include <stdexcept>
#include <string>

namespace rkhs_logit {

// Bad input: out-of-range parameters, wrong shapes, empty point sets.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Factorization failures, non-finite values, solver breakdown.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed CSV/JSON input. `row` is the 1-based line number, 0 if unknown.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t row)
      : ValidationError(row ? what + " (row " + std::to_string(row) + ")" : what),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace rkhs_logit
