#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace uec {

enum class ErrorKind {
  kShape,
  kRange,
  kFormat,
  kIo,
  kUsage,
  kNumeric,
};

const char* to_string(ErrorKind kind);

// Structured error: a kind, the offending field (dimension, tensor name,
// flag, file...) and a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        kind_(kind),
        field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace uec
