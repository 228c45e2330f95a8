#include "waveformer/errors.hpp"

namespace wf {

const char* errc_name(errc code) {
  switch (code) {
    case errc::ok: return "Ok";
    case errc::usage_error: return "UsageError";
    case errc::bad_value: return "BadValue";
    case errc::unknown_key: return "UnknownKey";
    case errc::odd_width: return "OddWidth";
    case errc::unknown_wavelet: return "UnknownWavelet";
    case errc::io_error: return "IoError";
    case errc::misaligned: return "Misaligned";
    case errc::shape_mismatch: return "ShapeMismatch";
    case errc::non_finite: return "NonFinite";
    case errc::not_scalar: return "NotScalar";
    case errc::detached_root: return "DetachedRoot";
    case errc::bad_length: return "BadLength";
    case errc::too_short: return "TooShort";
    case errc::zero_reference: return "ZeroReference";
    case errc::unstable: return "Unstable";
    case errc::degenerate_field: return "DegenerateField";
    case errc::early_nan: return "EarlyNaN";
  }
  return "Unknown";
}

int exit_class(errc code) {
  switch (code) {
    case errc::ok:
      return 0;
    case errc::usage_error:
    case errc::bad_value:
    case errc::unknown_key:
    case errc::odd_width:
    case errc::unknown_wavelet:
      return 1;
    case errc::io_error:
    case errc::misaligned:
      return 2;
    default:
      return 3;
  }
}

}  // namespace wf
