#pragma once

#include <stdexcept>
#include <string>

namespace symkernel {

// Failure categories; values double as CLI exit codes.
enum class ErrorCode : int {
  usage = 2,
  parse = 3,
  constraint = 4,
  not_representable = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

  const char* code_name() const {
    switch (code_) {
      case ErrorCode::usage: return "usage";
      case ErrorCode::parse: return "parse";
      case ErrorCode::constraint: return "constraint";
      case ErrorCode::not_representable: return "not-representable";
    }
    return "unknown";
  }

 private:
  ErrorCode code_;
};

}  // namespace symkernel
