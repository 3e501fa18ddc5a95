#pragma once

#include <stdexcept>
#include <string>

namespace xpca {

// Numeric values double as CLI exit codes; keep them stable.
enum class ErrorCode : int {
  invalid_input = 2,
  parse_error = 3,
  convergence_failure = 4,
  undefined_result = 5,
  insufficient_exceedances = 6,
  io_error = 7,
};

const char* to_string(ErrorCode code) noexcept;

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

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::invalid_input, what);
}

}  // namespace xpca
