// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace awdlm {

enum class ErrorCode {
  invalid_argument = 1,
  io = 2,
  format = 3,
  state = 4,
};

// Every failure inside the core is reported as an awdlm::Error; the C API
// translates the code into an awdlm_status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::invalid_argument, what);
}

}  // namespace awdlm

// Argument check whose message is only built on failure.
#define AWDLM_REQUIRE(condition, message)                                   \
  do {                                                                      \
    if (!(condition)) ::awdlm::fail(::awdlm::ErrorCode::invalid_argument, message); \
  } while (false)
