#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace reuselab {

enum class ErrorCode {
  FileMissing,
  MalformedPpm,
  DimensionMismatch,
  Config,
  Domain,
  InvalidSpec,
  Schema,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileMissing: return "file-missing";
    case ErrorCode::MalformedPpm: return "malformed-ppm";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::Config: return "config";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::Schema: return "schema";
  }
  return "unknown";
}

// Every failure raised by the library. `index` names the offending entry
// (manifest position, transition, row) when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace reuselab
