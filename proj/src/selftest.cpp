#include "waveformer/selftest.hpp"

#include <cmath>
#include <iostream>

#include "waveformer/attention.hpp"
#include "waveformer/fft.hpp"
#include "waveformer/io.hpp"
#include "waveformer/rng.hpp"
#include "waveformer/tensor.hpp"
#include "waveformer/wavelet.hpp"

namespace wf {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) raise(errc::unstable, "selftest failed: " + what);
  std::cout << "[ok] " << what << "\n";
}

Tensor random_tensor(Shape shape, RngStream& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> d(shape_numel(shape));
  for (double& v : d) v = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(d));
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

void run_selftest() {
  RngStream rng(42, 0);

  // filter identities
  for (const char* name : {"db2", "db3", "db4", "db5", "db6"}) {
    WaveletFilter f = make_filter(name);
    double sum = 0.0, sum2 = 0.0, hsum = 0.0;
    for (double v : f.dec_lo) {
      sum += v;
      sum2 += v * v;
    }
    for (double v : f.dec_hi) hsum += v;
    bool qmf = true;
    const int L = f.length();
    for (int i = 0; i < L; ++i)
      qmf = qmf && std::abs(f.dec_hi[i] - (i % 2 == 0 ? 1.0 : -1.0) * f.dec_lo[L - 1 - i]) == 0.0;
    require(std::abs(sum - std::sqrt(2.0)) < 1e-12 && std::abs(sum2 - 1.0) < 1e-12 &&
                std::abs(hsum) < 1e-12 && qmf,
            std::string(name) + " filter identities");
  }

  // wavelet round trip + Parseval
  {
    WaveletFilter f = make_filter("db3");
    Tensor x = random_tensor({32}, rng);
    WaveletCoeffs c = dwt_multilevel(x, f, 2);
    Tensor back = idwt_multilevel(c, f);
    double ex = 0.0, ec = 0.0;
    for (double v : x.data()) ex += v * v;
    for (double v : c.packed.data()) ec += v * v;
    require(max_abs_diff(x.data(), back.data()) < 1e-10 &&
                std::abs(ex - ec) / ex < 1e-9,
            "1D dwt/idwt round trip and Parseval");
  }
  {
    WaveletFilter f = make_filter("db2");
    Tensor x = random_tensor({16, 16}, rng);
    WaveletCoeffs c = dwt2_multilevel(x, f, 2);
    Tensor back = idwt2_multilevel(c, f);
    require(max_abs_diff(x.data(), back.data()) < 1e-10, "2D dwt/idwt round trip");
  }

  // fft
  {
    std::vector<double> sig(101);
    for (double& v : sig) v = rng.uniform(-1, 1);
    auto spec = fft_1d(sig);
    auto back = ifft_1d_real(spec);
    require(max_abs_diff(sig, back) < 1e-12, "fft round trip (Bluestein length)");
    std::vector<double> c64(64, 3.25);
    auto dc = fft_1d(c64);
    require(std::abs(dc[0].real() - 64 * 3.25) < 1e-9 && std::abs(dc[1]) < 1e-9,
            "fft DC bin");
  }

  // attention equals explicit kernel summation
  {
    const int64_t N = 5, d = 4;
    AttentionParams p;
    p.n_heads = 2;
    p.wq = random_tensor({d, d}, rng);
    p.wk = random_tensor({d, d}, rng);
    p.wv = random_tensor({d, d}, rng);
    p.wo = random_tensor({d, d}, rng);
    Tensor y = random_tensor({N, d}, rng);
    Tensor got = scaled_dot_attention(y, y, p);
    // brute force, head by head
    const int64_t dh = d / p.n_heads;
    std::vector<double> merged(N * d, 0.0);
    auto mm = [&](const Tensor& w) {
      std::vector<double> r(N * d, 0.0);
      for (int64_t i = 0; i < N; ++i)
        for (int64_t j = 0; j < d; ++j)
          for (int64_t l = 0; l < d; ++l)
            r[i * d + j] += y.data()[i * d + l] * w.data()[l * d + j];
      return r;
    };
    auto q = mm(p.wq), k = mm(p.wk), v = mm(p.wv);
    for (int h = 0; h < p.n_heads; ++h) {
      for (int64_t s = 0; s < N; ++s) {
        std::vector<double> score(N);
        double mx = -1e300;
        for (int64_t t = 0; t < N; ++t) {
          double dot = 0.0;
          for (int64_t j = 0; j < dh; ++j)
            dot += q[s * d + h * dh + j] * k[t * d + h * dh + j];
          score[t] = dot / std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, score[t]);
        }
        double z = 0.0;
        for (int64_t t = 0; t < N; ++t) {
          score[t] = std::exp(score[t] - mx);
          z += score[t];
        }
        for (int64_t t = 0; t < N; ++t)
          for (int64_t j = 0; j < dh; ++j)
            merged[s * d + h * dh + j] += score[t] / z * v[t * d + h * dh + j];
      }
    }
    std::vector<double> want(N * d, 0.0);
    for (int64_t i = 0; i < N; ++i)
      for (int64_t j = 0; j < d; ++j)
        for (int64_t l = 0; l < d; ++l)
          want[i * d + j] += merged[i * d + l] * p.wo.data()[l * d + j];
    require(max_abs_diff(got.data(), want) < 1e-12, "attention kernel summation");
  }

  // softmax normalization and shift invariance
  {
    Tensor x = random_tensor({6, 5}, rng, -3, 3);
    Tensor s = softmax_last(x);
    bool rows_ok = true;
    for (int64_t r = 0; r < 6; ++r) {
      double sum = 0.0;
      for (int64_t i = 0; i < 5; ++i) sum += s.at({r, i});
      rows_ok = rows_ok && std::abs(sum - 1.0) < 1e-12;
    }
    Tensor shifted = softmax_last(add(x, Tensor::full({6, 5}, 17.5)));
    require(rows_ok && max_abs_diff(s.data(), shifted.data()) < 1e-12,
            "softmax rows sum to 1 and shift invariance");
  }

  // autodiff spot check through a composite
  {
    Tensor x = random_tensor({8}, rng, 0.2, 1.0);
    auto f = [](const Tensor& t) {
      return sum_all(gelu(multiply(t, softmax_last(t))));
    };
    require(grad_check(f, x, 1e-5) < 1e-6, "gradient spot check");
  }

  // adam first step is -lr * sign(g)
  {
    std::vector<Tensor> params{Tensor::zeros({3}, true)};
    std::vector<double> g{0.5, -2.0, 1e-3};
    AdamState st;
    st.init(params);
    st.lr = 0.1;
    std::vector<std::span<const double>> gv{std::span<const double>(g)};
    adam_step(params, gv, st);
    bool ok = true;
    for (int i = 0; i < 3; ++i)
      ok = ok && std::abs(params[0].data()[i] + 0.1 * (g[i] > 0 ? 1.0 : -1.0)) < 1e-5;
    require(ok, "adam bias-corrected first step");
  }

  // rng determinism and stream separation
  {
    RngStream a(7, 0), b(7, 0), c(7, 1);
    bool same = true, diff = false;
    for (int i = 0; i < 64; ++i) {
      const uint64_t va = a.next_u64(), vb = b.next_u64(), vc = c.next_u64();
      same = same && va == vb;
      diff = diff || va != vc;
    }
    require(same && diff, "rng stream determinism");
  }

  // spectral resample of a band-limited signal
  {
    std::vector<double> s60(60);
    for (int i = 0; i < 60; ++i) s60[i] = std::sin(2.0 * M_PI * i / 60.0);
    auto s64 = spectral_resample(s60, 60, 64);
    double err = 0.0;
    for (int i = 0; i < 64; ++i)
      err = std::max(err, std::abs(s64[i] - std::sin(2.0 * M_PI * i / 64.0)));
    require(err < 1e-10, "band-limited spectral resample");
  }
}

}  // namespace wf
