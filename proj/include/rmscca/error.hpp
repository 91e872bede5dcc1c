#pragma once

#include <stdexcept>
#include <string>

namespace rmscca {

// Base for every error raised by the library. The CLI maps subclasses onto
// process exit codes (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: empty matrices, mismatched shapes, bad ranges.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A column with zero variance under the active estimator.
class DegenerateColumn : public Error {
 public:
  DegenerateColumn(std::string block, long index, std::string name)
      : Error("degenerate (constant) column " + block + "[" + std::to_string(index) + "]" +
              (name.empty() ? std::string{} : " '" + name + "'")),
        block_(std::move(block)),
        index_(index),
        name_(std::move(name)) {}

  const std::string& block() const noexcept { return block_; }
  long index() const noexcept { return index_; }
  const std::string& name() const noexcept { return name_; }

 private:
  std::string block_;
  long index_;
  std::string name_;
};

// Soft-thresholding removed every entry of u or v.
class DegeneratePair : public Error {
 public:
  DegeneratePair(double lambda_u, double lambda_v)
      : Error("thresholding annihilated the singular vector at lambda_u=" +
              std::to_string(lambda_u) + ", lambda_v=" + std::to_string(lambda_v)),
        lambda_u_(lambda_u),
        lambda_v_(lambda_v) {}

  double lambda_u() const noexcept { return lambda_u_; }
  double lambda_v() const noexcept { return lambda_v_; }

 private:
  double lambda_u_;
  double lambda_v_;
};

// Every cell of the penalty grid was degenerate for some pair.
class NoViableLambda : public Error {
 public:
  explicit NoViableLambda(int pair_index)
      : Error("no viable (lambda_u, lambda_v) cell for canonical pair " +
              std::to_string(pair_index + 1)),
        pair_index_(pair_index) {}

  int pair_index() const noexcept { return pair_index_; }

 private:
  int pair_index_;
};

// Unreadable input files; carries the 1-based row/column when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row = -1, long column = -1)
      : Error(what + (row >= 0 ? " (row " + std::to_string(row) +
                                     (column >= 0 ? ", column " + std::to_string(column) : "") +
                                     ")"
                               : std::string{})),
        row_(row),
        column_(column) {}

  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  long row_;
  long column_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rmscca
