#pragma once

#include <stdexcept>
#include <string>

namespace glyphlab {

enum class ErrorCode {
  Argument = 1,
  Dimension,
  Io,
  CorruptFile,
  UnsupportedFormat,
  UnsupportedDepth,
  EmptyDataset,
  Stratification,
  UndefinedCurve,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure inside the library surfaces as this exception; the C API
// turns it into a status code plus a thread-local message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace glyphlab
