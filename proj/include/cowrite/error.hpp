#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cowrite {

// Failures are grouped by the exit code the CLI maps them to.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent input data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical preconditions that cannot be met (exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

class MalformedRecord : public DataError {
 public:
  MalformedRecord(std::size_t line_no, const std::string& why)
      : DataError("malformed record at line " + std::to_string(line_no) + ": " + why),
        line_no_(line_no) {}
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

class UnknownEventName : public DataError {
 public:
  explicit UnknownEventName(const std::string& name)
      : DataError("unknown event name '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class EmptySession : public DataError {
 public:
  EmptySession() : DataError("session has no valid events") {}
};

class ScoreOutOfRange : public DataError {
 public:
  ScoreOutOfRange(std::size_t row, long value)
      : DataError("survey score " + std::to_string(value) + " out of [1,7] at row " +
                  std::to_string(row)),
        row_(row),
        value_(value) {}
  std::size_t row() const { return row_; }
  long value() const { return value_; }

 private:
  std::size_t row_;
  long value_;
};

class ReplayGap : public DataError {
 public:
  explicit ReplayGap(std::size_t event_index)
      : DataError("cannot reconstruct document at event " + std::to_string(event_index)),
        event_index_(event_index) {}
  std::size_t event_index() const { return event_index_; }

 private:
  std::size_t event_index_;
};

class NonFiniteInput : public NumericError {
 public:
  NonFiniteInput() : NumericError("non-finite value in input") {}
};

class DimensionMismatch : public NumericError {
 public:
  DimensionMismatch(std::size_t a, std::size_t b)
      : NumericError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class EmptyMemberSet : public NumericError {
 public:
  EmptyMemberSet() : NumericError("barycenter requested for an empty member set") {}
};

class TooFewSeries : public NumericError {
 public:
  TooFewSeries(std::size_t n, std::size_t k)
      : NumericError("corpus of " + std::to_string(n) + " series cannot form " +
                     std::to_string(k) + " clusters") {}
};

class SampleTooSmall : public NumericError {
 public:
  using NumericError::NumericError;
};

class SampleTooLarge : public NumericError {
 public:
  using NumericError::NumericError;
};

class ZeroVariance : public NumericError {
 public:
  ZeroVariance() : NumericError("sample has zero variance") {}
};

class EmptySample : public NumericError {
 public:
  EmptySample() : NumericError("empty sample") {}
};

class EmptyCluster : public NumericError {
 public:
  explicit EmptyCluster(int label)
      : NumericError("cluster " + std::to_string(label) + " has no members") {}
};

// Invalid configuration or command line (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ProviderUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace cowrite
