// Internal error type shared by all modules. The C API maps Errc onto
// td_status codes at the library boundary.
#pragma once

#include <stdexcept>
#include <string>

namespace td {

enum class Errc {
  invalid_argument,
  config,
  io,
  bad_magic,
  bad_version,
  truncated,
  corrupt,
  shape_mismatch,
  missing_weight,
  invalid_params,
  image_format,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace td
