#pragma once

#include <stdexcept>
#include <string>

namespace bailaudit {

// Base of every error raised by the library. The CLI maps these to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or unknown configuration: tokenizer names, template files, dimensions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data. Carries the offending record id when one is known.
class IngestionError : public Error {
 public:
  IngestionError(std::string record_id, const std::string& what)
      : Error(record_id.empty() ? what : what + " (record " + record_id + ")"),
        record_id_(std::move(record_id)) {}

  const std::string& record_id() const noexcept { return record_id_; }

 private:
  std::string record_id_;
};

// Violated precondition of a pipeline operation (empty inputs, split misuse).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Test-split data reached a structure that must only hold training data.
class ContaminationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace bailaudit
