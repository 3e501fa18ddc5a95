#include "xpca/error.hpp"

namespace xpca {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_input:
      return "invalid-input";
    case ErrorCode::parse_error:
      return "parse-error";
    case ErrorCode::convergence_failure:
      return "convergence-failure";
    case ErrorCode::undefined_result:
      return "undefined-result";
    case ErrorCode::insufficient_exceedances:
      return "insufficient-exceedances";
    case ErrorCode::io_error:
      return "io-error";
  }
  return "unknown";
}

}  // namespace xpca
