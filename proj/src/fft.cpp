#include "waveformer/fft.hpp"

#include <cmath>

#include "waveformer/errors.hpp"

namespace wf {

namespace {

bool is_pow2(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_pow2(cplx* x, int64_t n, bool inverse) {
  // bit reversal
  for (int64_t i = 1, j = 0; i < n; ++i) {
    int64_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (int64_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const cplx wl(std::cos(ang), std::sin(ang));
    for (int64_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (int64_t j = 0; j < len / 2; ++j) {
        const cplx u = x[i + j];
        const cplx v = x[i + j + len / 2] * w;
        x[i + j] = u + v;
        x[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Bluestein chirp-z: arbitrary-length DFT via a power-of-two convolution.
void fft_bluestein(std::vector<cplx>& x, bool inverse) {
  const int64_t n = static_cast<int64_t>(x.size());
  int64_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<cplx> a(m, cplx(0.0, 0.0)), b(m, cplx(0.0, 0.0));
  std::vector<cplx> chirp(n);
  for (int64_t k = 0; k < n; ++k) {
    // angle = pi * k^2 / n, with k^2 reduced mod 2n to keep it exact
    const int64_t k2 = (k * k) % (2 * n);
    const double ang = sign * M_PI * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = cplx(std::cos(ang), std::sin(ang));
    a[k] = x[k] * chirp[k];
    b[k] = std::conj(chirp[k]);
    if (k > 0) b[m - k] = std::conj(chirp[k]);
  }
  fft_pow2(a.data(), m, false);
  fft_pow2(b.data(), m, false);
  for (int64_t i = 0; i < m; ++i) a[i] *= b[i];
  fft_pow2(a.data(), m, true);
  const double scale = 1.0 / static_cast<double>(m);
  for (int64_t k = 0; k < n; ++k) x[k] = a[k] * scale * chirp[k];
}

}  // namespace

void fft(std::vector<cplx>& x, bool inverse) {
  const int64_t n = static_cast<int64_t>(x.size());
  if (n == 0) raise(errc::bad_length, "fft of empty signal");
  if (n == 1) return;
  if (is_pow2(n)) {
    fft_pow2(x.data(), n, inverse);
  } else {
    fft_bluestein(x, inverse);
  }
  if (inverse) {
    const double s = 1.0 / static_cast<double>(n);
    for (cplx& v : x) v *= s;
  }
}

std::vector<cplx> fft_1d(std::span<const double> x) {
  std::vector<cplx> out(x.begin(), x.end());
  fft(out, false);
  return out;
}

std::vector<double> ifft_1d_real(std::span<const cplx> spec) {
  std::vector<cplx> tmp(spec.begin(), spec.end());
  fft(tmp, true);
  std::vector<double> out(tmp.size());
  for (size_t i = 0; i < tmp.size(); ++i) out[i] = tmp[i].real();
  return out;
}

void fft_2d(std::vector<cplx>& x, int64_t n1, int64_t n2, bool inverse) {
  if (static_cast<int64_t>(x.size()) != n1 * n2)
    raise(errc::bad_length, "fft_2d: size does not match extents");
  std::vector<cplx> row(n2), col(n1);
  for (int64_t i = 0; i < n1; ++i) {
    std::copy(x.begin() + i * n2, x.begin() + (i + 1) * n2, row.begin());
    fft(row, inverse);
    std::copy(row.begin(), row.end(), x.begin() + i * n2);
  }
  for (int64_t j = 0; j < n2; ++j) {
    for (int64_t i = 0; i < n1; ++i) col[i] = x[i * n2 + j];
    fft(col, inverse);
    for (int64_t i = 0; i < n1; ++i) x[i * n2 + j] = col[i];
  }
}

std::vector<cplx> fft_2d(std::span<const double> x, int64_t n1, int64_t n2) {
  std::vector<cplx> out(x.begin(), x.end());
  fft_2d(out, n1, n2, false);
  return out;
}

std::vector<double> ifft_2d_real(std::vector<cplx> spec, int64_t n1, int64_t n2) {
  fft_2d(spec, n1, n2, true);
  std::vector<double> out(spec.size());
  for (size_t i = 0; i < spec.size(); ++i) out[i] = spec[i].real();
  return out;
}

}  // namespace wf
