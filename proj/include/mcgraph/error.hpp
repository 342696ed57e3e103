#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mcgraph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: unreadable files, out-of-range ratings, empty datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed CSV line.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyDatasetError : public DataError {
 public:
  using DataError::DataError;
};

/// Operand shapes do not fit the operation named in the message.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class NumericError : public Error {
 public:
  NumericError(int epoch, const std::string& what)
      : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Invalid configuration key, value, or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcgraph
