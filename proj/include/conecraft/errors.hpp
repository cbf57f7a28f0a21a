#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conecraft {

enum class ErrorCode {
  OutsideCone,
  DimensionLimit,
  DegenerateCone,
  NoConvergence,
  StartOutside,
  CertLimit,
  Horizon,
  Geometry,
  Incompatible,
  Censoring,
  Parse,
  Validate,
  Precondition,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Structured failure carried by every operation in the library. The code is
/// stable and machine-readable; the message names the offending item.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace conecraft
