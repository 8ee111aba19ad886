#pragma once

#include <stdexcept>
#include <string>

namespace gesture {

// Category of a failure. The CLI maps every kind to exit code 2.
enum class ErrorKind {
  InvalidInput,
  Config,
  TooShort,
  Shape,
  State,
  Contract,
  Alignment,
  Checkpoint,
  Format,
  Io,
  Internal,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace gesture
