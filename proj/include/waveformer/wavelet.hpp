#pragma once

#include <string>
#include <vector>

#include "waveformer/tensor.hpp"

namespace wf {

/// Orthonormal Daubechies analysis/synthesis filter quadruple.
/// dec_hi[i] = (-1)^i dec_lo[L-1-i]; rec filters are the time-reversed dec
/// filters. Sum(dec_lo) = sqrt(2), Sum(dec_lo^2) = 1.
struct WaveletFilter {
  std::string name;
  int vanishing_moments = 0;
  std::vector<double> dec_lo, dec_hi, rec_lo, rec_hi;
  int length() const { return static_cast<int>(dec_lo.size()); }
};

/// Supported: db2, db3, db4, db5, db6.
WaveletFilter make_filter(const std::string& name);

/// Multilevel coefficients over the trailing spatial axis/axes of a tensor.
/// Bands are packed into a single tensor of the input's shape:
///   1D: [approx_p | detail_p | detail_{p-1} | ... | detail_1]
///   2D: nested quadrants, level-p approximation in the leading corner.
/// Accessors return differentiable views (slices) into the packed tensor.
struct WaveletCoeffs {
  Tensor packed;
  int levels = 0;
  int spatial_dims = 1;

  /// Approximation band: extent(s) = input extent(s) / 2^levels.
  Tensor approx() const;
  /// 1D detail band at `level` in [1, levels]; level == levels is coarsest.
  Tensor detail(int level) const;
  /// 2D detail band; `band` 0 = LH, 1 = HL, 2 = HH.
  Tensor detail2(int level, int band) const;
  /// Same coefficient set with the approximation band replaced.
  WaveletCoeffs with_approx(const Tensor& a) const;

  int64_t approx_extent(int axis) const;
};

// Periodic (circular) Mallat transform, applied p times to the approximation
// band. Spatial extents must be divisible by 2^p. Differentiable; the
// backward pass of the analysis step is the synthesis step (orthogonality).
WaveletCoeffs dwt_multilevel(const Tensor& x, const WaveletFilter& f, int levels);
Tensor idwt_multilevel(const WaveletCoeffs& c, const WaveletFilter& f);

// Separable 2D variant over the two trailing axes (rows then columns per
// level).
WaveletCoeffs dwt2_multilevel(const Tensor& x, const WaveletFilter& f, int levels);
Tensor idwt2_multilevel(const WaveletCoeffs& c, const WaveletFilter& f);

// single-level steps (exposed for tests)
Tensor dwt_step(const Tensor& x, const WaveletFilter& f);
Tensor idwt_step(const Tensor& y, const WaveletFilter& f);
Tensor dwt2_step(const Tensor& x, const WaveletFilter& f);
Tensor idwt2_step(const Tensor& y, const WaveletFilter& f);

}  // namespace wf
