#pragma once

#include <complex>
#include <span>
#include <vector>

namespace wf {

using cplx = std::complex<double>;

/// In-place complex DFT of arbitrary length: iterative radix-2 for powers of
/// two, Bluestein's chirp-z fallback otherwise. Forward is unnormalized
/// (DC bin of a constant c over n points is n*c); inverse scales by 1/n.
void fft(std::vector<cplx>& x, bool inverse);

/// Real field -> full complex spectrum.
std::vector<cplx> fft_1d(std::span<const double> x);
/// Complex spectrum -> real field (imaginary parts discarded).
std::vector<double> ifft_1d_real(std::span<const cplx> spec);

/// Row-major n1 x n2, transformed along both axes in place.
void fft_2d(std::vector<cplx>& x, int64_t n1, int64_t n2, bool inverse);
std::vector<cplx> fft_2d(std::span<const double> x, int64_t n1, int64_t n2);
std::vector<double> ifft_2d_real(std::vector<cplx> spec, int64_t n1, int64_t n2);

/// Signed integer wavenumber for bin k of an n-point transform.
inline int64_t fft_freq(int64_t k, int64_t n) { return k <= n / 2 ? k : k - n; }

}  // namespace wf
