#include "waveformer/wavelet.hpp"

#include <cmath>
#include <cstring>

namespace wf {

namespace {

// Orthonormal Daubechies scaling coefficients (sum = sqrt(2)), derived from
// the standard spectral factorization of the binomial half-band polynomial.
const double kDb2[4] = {
    0.48296291314453414337, 0.83651630373780790558,
    0.22414386804201338103, -0.12940952255126038117};
const double kDb3[6] = {
    0.33267055295008261600, 0.80689150931109257649,
    0.45987750211849157010, -0.13501102001025458870,
    -0.08544127388202666169, 0.03522629188570953660};
const double kDb4[8] = {
    0.23037781330889650086, 0.71484657055291564709,
    0.63088076792985890788, -0.02798376941685985421,
    -0.18703481171909308408, 0.03084138183556076363,
    0.03288301166688519973, -0.01059740178506903210};
const double kDb5[10] = {
    0.16010239797419291448, 0.60382926979718967054,
    0.72430852843777292773, 0.13842814590132073151,
    -0.24229488706638203186, -0.03224486958463837465,
    0.07757149384004571352, -0.00624149021279827427,
    -0.01258075199908199947, 0.00333572528547377128};
const double kDb6[12] = {
    0.11154074335010946362, 0.49462389039845308568,
    0.75113390802109535068, 0.31525035170919762909,
    -0.22626469396543982008, -0.12976686756726193556,
    0.09750160558732304910, 0.02752286553030572863,
    -0.03158203931748602957, 0.00055384220116149614,
    0.00477725751094551064, -0.00107730108530847956};

struct Entry {
  const char* name;
  const double* lo;
  int moments;
};
const Entry kTable[] = {
    {"db2", kDb2, 2}, {"db3", kDb3, 3}, {"db4", kDb4, 4},
    {"db5", kDb5, 5}, {"db6", kDb6, 6},
};

// y = [approx | detail] over one periodic row of length n.
void analysis_rows(const double* x, double* y, int64_t rows, int64_t n,
                   const WaveletFilter& f) {
  const int L = f.length();
  const int64_t half = n / 2;
  const double* lo = f.dec_lo.data();
  const double* hi = f.dec_hi.data();
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = x + r * n;
    double* yr = y + r * n;
    for (int64_t i = 0; i < half; ++i) {
      double a = 0.0, d = 0.0;
      const int64_t base = 2 * i;
      for (int j = 0; j < L; ++j) {
        const double v = xr[(base + j) % n];
        a += v * lo[j];
        d += v * hi[j];
      }
      yr[i] = a;
      yr[half + i] = d;
    }
  }
}

// adjoint (= inverse) of analysis_rows; x is zero-filled first
void synthesis_rows(const double* y, double* x, int64_t rows, int64_t n,
                    const WaveletFilter& f) {
  const int L = f.length();
  const int64_t half = n / 2;
  const double* lo = f.dec_lo.data();
  const double* hi = f.dec_hi.data();
  std::fill(x, x + rows * n, 0.0);
  for (int64_t r = 0; r < rows; ++r) {
    const double* yr = y + r * n;
    double* xr = x + r * n;
    for (int64_t i = 0; i < half; ++i) {
      const double a = yr[i];
      const double d = yr[half + i];
      const int64_t base = 2 * i;
      for (int j = 0; j < L; ++j) xr[(base + j) % n] += a * lo[j] + d * hi[j];
    }
  }
}

void transpose_slab(const double* src, double* dst, int64_t rows, int64_t cols) {
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
}

// rows pass along the last axis, then the same along the second-to-last
void analysis2_slab(const double* x, double* y, int64_t n1, int64_t n2,
                    const WaveletFilter& f, std::vector<double>& tmp) {
  tmp.resize(2 * n1 * n2);
  double* t0 = tmp.data();
  double* t1 = tmp.data() + n1 * n2;
  analysis_rows(x, t0, n1, n2, f);
  transpose_slab(t0, t1, n1, n2);
  analysis_rows(t1, t0, n2, n1, f);
  transpose_slab(t0, y, n2, n1);
}

void synthesis2_slab(const double* y, double* x, int64_t n1, int64_t n2,
                     const WaveletFilter& f, std::vector<double>& tmp) {
  tmp.resize(2 * n1 * n2);
  double* t0 = tmp.data();
  double* t1 = tmp.data() + n1 * n2;
  transpose_slab(y, t0, n1, n2);
  synthesis_rows(t0, t1, n2, n1, f);
  transpose_slab(t1, t0, n2, n1);
  synthesis_rows(t0, x, n1, n2, f);
}

void require_even(int64_t n, const char* what) {
  if (n < 2 || n % 2 != 0)
    raise(errc::bad_length, std::string(what) + ": extent " + std::to_string(n) +
                                " is not an even length >= 2");
}

void require_divisible(int64_t n, int levels, const char* what) {
  if (levels < 1) raise(errc::bad_value, std::string(what) + ": levels must be >= 1");
  const int64_t div = int64_t(1) << levels;
  if (n % div != 0 || n / div < 1)
    raise(errc::bad_length, std::string(what) + ": extent " + std::to_string(n) +
                                " not divisible by 2^" + std::to_string(levels));
}

}  // namespace

WaveletFilter make_filter(const std::string& name) {
  for (const Entry& e : kTable) {
    if (name == e.name) {
      WaveletFilter f;
      f.name = e.name;
      f.vanishing_moments = e.moments;
      const int L = 2 * e.moments;
      f.dec_lo.assign(e.lo, e.lo + L);
      f.dec_hi.resize(L);
      for (int i = 0; i < L; ++i)
        f.dec_hi[i] = (i % 2 == 0 ? 1.0 : -1.0) * f.dec_lo[L - 1 - i];
      f.rec_lo.assign(f.dec_lo.rbegin(), f.dec_lo.rend());
      f.rec_hi.assign(f.dec_hi.rbegin(), f.dec_hi.rend());
      return f;
    }
  }
  raise(errc::unknown_wavelet, "unknown wavelet '" + name + "'");
}

Tensor dwt_step(const Tensor& x, const WaveletFilter& f) {
  const int64_t n = x.extent(-1);
  require_even(n, "dwt");
  const int64_t rows = x.numel() / n;
  Tensor out = Tensor::zeros(x.shape());
  analysis_rows(x.data().data(), out.mutable_data().data(), rows, n, f);
  Tensor xc = x, oc = out;
  WaveletFilter fc = f;
  Tape* t = Tape::active();
  if (t && x.requires_grad()) {
    out.set_requires_grad(true);
    out.node()->produced_by = t;
    t->record([xc, oc, fc, rows, n]() {
      if (oc.node()->grad.empty() || !xc.requires_grad()) return;
      xc.node()->ensure_grad();
      std::vector<double> tmp(rows * n);
      synthesis_rows(oc.node()->grad.data(), tmp.data(), rows, n, fc);
      double* g = xc.node()->grad.data();
      for (size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
    });
  }
  return out;
}

Tensor idwt_step(const Tensor& y, const WaveletFilter& f) {
  const int64_t n = y.extent(-1);
  require_even(n, "idwt");
  const int64_t rows = y.numel() / n;
  Tensor out = Tensor::zeros(y.shape());
  synthesis_rows(y.data().data(), out.mutable_data().data(), rows, n, f);
  Tensor yc = y, oc = out;
  WaveletFilter fc = f;
  Tape* t = Tape::active();
  if (t && y.requires_grad()) {
    out.set_requires_grad(true);
    out.node()->produced_by = t;
    t->record([yc, oc, fc, rows, n]() {
      if (oc.node()->grad.empty() || !yc.requires_grad()) return;
      yc.node()->ensure_grad();
      std::vector<double> tmp(rows * n);
      analysis_rows(oc.node()->grad.data(), tmp.data(), rows, n, fc);
      double* g = yc.node()->grad.data();
      for (size_t i = 0; i < tmp.size(); ++i) g[i] += tmp[i];
    });
  }
  return out;
}

Tensor dwt2_step(const Tensor& x, const WaveletFilter& f) {
  if (x.rank() < 2) raise(errc::shape_mismatch, "dwt2 needs rank >= 2");
  const int64_t n1 = x.extent(-2), n2 = x.extent(-1);
  require_even(n1, "dwt2");
  require_even(n2, "dwt2");
  const int64_t slabs = x.numel() / (n1 * n2);
  Tensor out = Tensor::zeros(x.shape());
  std::vector<double> tmp;
  for (int64_t s = 0; s < slabs; ++s)
    analysis2_slab(x.data().data() + s * n1 * n2,
                   out.mutable_data().data() + s * n1 * n2, n1, n2, f, tmp);
  Tensor xc = x, oc = out;
  WaveletFilter fc = f;
  Tape* t = Tape::active();
  if (t && x.requires_grad()) {
    out.set_requires_grad(true);
    out.node()->produced_by = t;
    t->record([xc, oc, fc, slabs, n1, n2]() {
      if (oc.node()->grad.empty() || !xc.requires_grad()) return;
      xc.node()->ensure_grad();
      std::vector<double> tmp, slab(n1 * n2);
      double* g = xc.node()->grad.data();
      for (int64_t s = 0; s < slabs; ++s) {
        synthesis2_slab(oc.node()->grad.data() + s * n1 * n2, slab.data(), n1, n2,
                        fc, tmp);
        for (int64_t i = 0; i < n1 * n2; ++i) g[s * n1 * n2 + i] += slab[i];
      }
    });
  }
  return out;
}

Tensor idwt2_step(const Tensor& y, const WaveletFilter& f) {
  if (y.rank() < 2) raise(errc::shape_mismatch, "idwt2 needs rank >= 2");
  const int64_t n1 = y.extent(-2), n2 = y.extent(-1);
  require_even(n1, "idwt2");
  require_even(n2, "idwt2");
  const int64_t slabs = y.numel() / (n1 * n2);
  Tensor out = Tensor::zeros(y.shape());
  std::vector<double> tmp;
  for (int64_t s = 0; s < slabs; ++s)
    synthesis2_slab(y.data().data() + s * n1 * n2,
                    out.mutable_data().data() + s * n1 * n2, n1, n2, f, tmp);
  Tensor yc = y, oc = out;
  WaveletFilter fc = f;
  Tape* t = Tape::active();
  if (t && y.requires_grad()) {
    out.set_requires_grad(true);
    out.node()->produced_by = t;
    t->record([yc, oc, fc, slabs, n1, n2]() {
      if (oc.node()->grad.empty() || !yc.requires_grad()) return;
      yc.node()->ensure_grad();
      std::vector<double> tmp, slab(n1 * n2);
      double* g = yc.node()->grad.data();
      for (int64_t s = 0; s < slabs; ++s) {
        analysis2_slab(oc.node()->grad.data() + s * n1 * n2, slab.data(), n1, n2,
                       fc, tmp);
        for (int64_t i = 0; i < n1 * n2; ++i) g[s * n1 * n2 + i] += slab[i];
      }
    });
  }
  return out;
}

// ---- multilevel ----------------------------------------------------------------

WaveletCoeffs dwt_multilevel(const Tensor& x, const WaveletFilter& f, int levels) {
  const int64_t n = x.extent(-1);
  require_divisible(n, levels, "dwt");
  Tensor cur = dwt_step(x, f);
  for (int l = 1; l < levels; ++l) {
    const int64_t m = n >> l;  // current approx length
    Tensor a2 = dwt_step(slice(cur, -1, 0, m), f);
    cur = concat({a2, slice(cur, -1, m, n)}, -1);
  }
  WaveletCoeffs c;
  c.packed = cur;
  c.levels = levels;
  c.spatial_dims = 1;
  return c;
}

Tensor idwt_multilevel(const WaveletCoeffs& c, const WaveletFilter& f) {
  if (c.spatial_dims != 1)
    raise(errc::shape_mismatch, "idwt_multilevel expects 1D coefficients");
  const int64_t n = c.packed.extent(-1);
  require_divisible(n, c.levels, "idwt");
  Tensor cur = c.packed;
  for (int l = c.levels; l >= 1; --l) {
    const int64_t block = n >> (l - 1);  // [approx|detail] extent at this level
    Tensor blk = block == n ? cur : slice(cur, -1, 0, block);
    Tensor rec = idwt_step(blk, f);
    cur = block == n ? rec : concat({rec, slice(cur, -1, block, n)}, -1);
  }
  return cur;
}

WaveletCoeffs dwt2_multilevel(const Tensor& x, const WaveletFilter& f, int levels) {
  if (x.rank() < 2) raise(errc::shape_mismatch, "dwt2 needs rank >= 2");
  const int64_t n1 = x.extent(-2), n2 = x.extent(-1);
  require_divisible(n1, levels, "dwt2");
  require_divisible(n2, levels, "dwt2");
  Tensor cur = dwt2_step(x, f);
  for (int l = 1; l < levels; ++l) {
    const int64_t m1 = n1 >> l, m2 = n2 >> l;
    Tensor ll = slice(slice(cur, -2, 0, m1), -1, 0, m2);
    Tensor ll2 = dwt2_step(ll, f);
    Tensor top_rest = slice(slice(cur, -2, 0, m1), -1, m2, n2);
    Tensor top = concat({ll2, top_rest}, -1);
    Tensor bottom = slice(cur, -2, m1, n1);
    cur = concat({top, bottom}, -2);
  }
  WaveletCoeffs c;
  c.packed = cur;
  c.levels = levels;
  c.spatial_dims = 2;
  return c;
}

Tensor idwt2_multilevel(const WaveletCoeffs& c, const WaveletFilter& f) {
  if (c.spatial_dims != 2)
    raise(errc::shape_mismatch, "idwt2_multilevel expects 2D coefficients");
  const int64_t n1 = c.packed.extent(-2), n2 = c.packed.extent(-1);
  require_divisible(n1, c.levels, "idwt2");
  require_divisible(n2, c.levels, "idwt2");
  Tensor cur = c.packed;
  for (int l = c.levels; l >= 1; --l) {
    const int64_t b1 = n1 >> (l - 1), b2 = n2 >> (l - 1);
    if (b1 == n1 && b2 == n2) {
      cur = idwt2_step(cur, f);
    } else {
      Tensor blk = slice(slice(cur, -2, 0, b1), -1, 0, b2);
      Tensor rec = idwt2_step(blk, f);
      Tensor top = concat({rec, slice(slice(cur, -2, 0, b1), -1, b2, n2)}, -1);
      cur = concat({top, slice(cur, -2, b1, n1)}, -2);
    }
  }
  return cur;
}

// ---- accessors -----------------------------------------------------------------

int64_t WaveletCoeffs::approx_extent(int axis) const {
  const int64_t n = packed.extent(axis - spatial_dims);
  return n >> levels;
}

Tensor WaveletCoeffs::approx() const {
  if (spatial_dims == 1) {
    return slice(packed, -1, 0, packed.extent(-1) >> levels);
  }
  const int64_t m1 = packed.extent(-2) >> levels;
  const int64_t m2 = packed.extent(-1) >> levels;
  return slice(slice(packed, -2, 0, m1), -1, 0, m2);
}

Tensor WaveletCoeffs::detail(int level) const {
  if (spatial_dims != 1) raise(errc::shape_mismatch, "detail() is the 1D accessor");
  if (level < 1 || level > levels) raise(errc::bad_value, "detail level out of range");
  const int64_t n = packed.extent(-1);
  return slice(packed, -1, n >> level, n >> (level - 1));
}

Tensor WaveletCoeffs::detail2(int level, int band) const {
  if (spatial_dims != 2) raise(errc::shape_mismatch, "detail2() is the 2D accessor");
  if (level < 1 || level > levels) raise(errc::bad_value, "detail level out of range");
  if (band < 0 || band > 2) raise(errc::bad_value, "band must be 0 (LH), 1 (HL) or 2 (HH)");
  const int64_t m1 = packed.extent(-2) >> level;
  const int64_t m2 = packed.extent(-1) >> level;
  const bool bottom = band != 0;
  const bool right = band != 1;
  Tensor rows = slice(packed, -2, bottom ? m1 : 0, bottom ? 2 * m1 : m1);
  return slice(rows, -1, right ? m2 : 0, right ? 2 * m2 : m2);
}

WaveletCoeffs WaveletCoeffs::with_approx(const Tensor& a) const {
  WaveletCoeffs out = *this;
  if (spatial_dims == 1) {
    const int64_t n = packed.extent(-1);
    const int64_t m = n >> levels;
    if (a.extent(-1) != m)
      raise(errc::shape_mismatch, "with_approx: band extent mismatch");
    out.packed = concat({a, slice(packed, -1, m, n)}, -1);
  } else {
    const int64_t n1 = packed.extent(-2), n2 = packed.extent(-1);
    const int64_t m1 = n1 >> levels, m2 = n2 >> levels;
    if (a.extent(-2) != m1 || a.extent(-1) != m2)
      raise(errc::shape_mismatch, "with_approx: band extent mismatch");
    Tensor top = concat({a, slice(slice(packed, -2, 0, m1), -1, m2, n2)}, -1);
    out.packed = concat({top, slice(packed, -2, m1, n1)}, -2);
  }
  return out;
}

}  // namespace wf
