#pragma once

#include <stdexcept>
#include <string>

namespace wf {

/// Error conditions surfaced by the library. Each code belongs to one of
/// three process-level classes (usage, I/O, numeric) used by the C API and
/// the CLI exit codes.
enum class errc {
  ok = 0,
  // usage / configuration
  usage_error,
  bad_value,
  unknown_key,
  odd_width,
  unknown_wavelet,
  // I/O and format
  io_error,
  misaligned,
  // numeric / shape
  shape_mismatch,
  non_finite,
  not_scalar,
  detached_root,
  bad_length,
  too_short,
  zero_reference,
  unstable,
  degenerate_field,
  early_nan,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& msg) {
  throw Error(code, msg);
}

const char* errc_name(errc code);

/// Process exit class: 0 ok, 1 usage, 2 I/O, 3 numeric failure.
int exit_class(errc code);

}  // namespace wf
