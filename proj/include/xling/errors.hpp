#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xling {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input data; carries the 1-based line number of the offense.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class ValueError : public Error {
public:
  using Error::Error;
};

class EmptyDictionaryError : public ValueError {
public:
  using ValueError::ValueError;
};

// Training produced a non-finite loss; carries the epoch where it happened.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, int epoch)
      : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

private:
  int epoch_;
};

class VersionError : public Error {
public:
  using Error::Error;
};

}  // namespace xling
