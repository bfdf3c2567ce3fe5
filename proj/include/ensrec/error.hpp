#pragma once

#include <stdexcept>
#include <string>

namespace ensrec {

enum class ErrorKind {
  kInvalidArgument,  // contract or precondition violation by the caller
  kIo,               // unreadable or unwritable file
  kFormat,           // file contents violate the expected layout
  kRuntime,          // anything else that went wrong while computing
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& message) {
  return Error(ErrorKind::kInvalidArgument, message);
}

inline Error format_error(const std::string& message) {
  return Error(ErrorKind::kFormat, message);
}

inline Error io_error(const std::string& message) {
  return Error(ErrorKind::kIo, message);
}

}  // namespace ensrec
