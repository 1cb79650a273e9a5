#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tieinfer {

// Base of every error the library throws. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDyad : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::vector<std::size_t> lines = {})
      : Error(what), lines_(std::move(lines)) {}

  // 1-based line numbers of the offending records (may be truncated).
  const std::vector<std::size_t>& lines() const noexcept { return lines_; }

 private:
  std::vector<std::size_t> lines_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

class StratificationError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class MissingMonth : public Error {
 public:
  using Error::Error;
};

class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

}  // namespace tieinfer
