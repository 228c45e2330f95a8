#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "waveformer/attention.hpp"
#include "waveformer/wavelet.hpp"

using namespace wf;

namespace {
const char* kNames[] = {"db2", "db3", "db4", "db5", "db6"};
}

TEST_CASE("db2 analysis filter matches the closed form") {
  WaveletFilter f = make_filter("db2");
  const double s3 = std::sqrt(3.0), s2 = std::sqrt(2.0);
  const double want[4] = {(1 + s3) / (4 * s2), (3 + s3) / (4 * s2),
                          (3 - s3) / (4 * s2), (1 - s3) / (4 * s2)};
  for (int i = 0; i < 4; ++i)
    CHECK(f.dec_lo[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK(f.dec_lo[0] == doctest::Approx(0.4829629131).epsilon(1e-9));
  CHECK(f.dec_lo[1] == doctest::Approx(0.8365163037).epsilon(1e-9));
  CHECK(f.dec_lo[2] == doctest::Approx(0.2241438680).epsilon(1e-9));
  CHECK(f.dec_lo[3] == doctest::Approx(-0.1294095226).epsilon(1e-8));
}

TEST_CASE("filter invariants hold for every family member") {
  for (const char* name : kNames) {
    WaveletFilter f = make_filter(name);
    CHECK(f.length() == 2 * f.vanishing_moments);
    double lo_sum = 0.0, lo_sq = 0.0, hi_sum = 0.0;
    for (double v : f.dec_lo) {
      lo_sum += v;
      lo_sq += v * v;
    }
    for (double v : f.dec_hi) hi_sum += v;
    CHECK(std::abs(lo_sum - std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(lo_sq - 1.0) < 1e-12);
    CHECK(std::abs(hi_sum) < 1e-12);
    // quadrature mirror and time-reversed reconstruction filters
    const int L = f.length();
    for (int i = 0; i < L; ++i) {
      CHECK(f.dec_hi[i] == (i % 2 == 0 ? 1.0 : -1.0) * f.dec_lo[L - 1 - i]);
      CHECK(f.rec_lo[i] == f.dec_lo[L - 1 - i]);
      CHECK(f.rec_hi[i] == f.dec_hi[L - 1 - i]);
    }
  }
}

TEST_CASE("unknown wavelet is rejected") {
  CHECK_THROWS_AS(make_filter("haar"), Error);
  CHECK_THROWS_AS(make_filter("db7"), Error);
}

TEST_CASE("constant signal: details vanish, approximation scales by sqrt(2) per level") {
  WaveletFilter f = make_filter("db2");
  Tensor x = Tensor::full({8}, 1.0);
  WaveletCoeffs c = dwt_multilevel(x, f, 2);
  Tensor a = c.approx();
  REQUIRE(a.shape() == Shape{2});
  CHECK(a.at({0}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(a.at({1}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(wft::max_abs(c.detail(1).data()) < 1e-12);
  CHECK(wft::max_abs(c.detail(2).data()) < 1e-12);

  // inverse of the constant example
  WaveletCoeffs c2 = c;
  Tensor back = idwt_multilevel(c2, f);
  for (int64_t i = 0; i < 8; ++i) CHECK(back.at({i}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("approximation length halves per level") {
  WaveletFilter f = make_filter("db3");
  RngStream rng(5, 0);
  Tensor x = wft::random_tensor({64}, rng);
  WaveletCoeffs c = dwt_multilevel(x, f, 3);
  CHECK(c.approx().shape() == Shape{8});
  CHECK(c.detail(3).shape() == Shape{8});
  CHECK(c.detail(2).shape() == Shape{16});
  CHECK(c.detail(1).shape() == Shape{32});
}

TEST_CASE("perfect reconstruction and Parseval for all filters and levels") {
  RngStream rng(6, 0);
  for (const char* name : kNames) {
    WaveletFilter f = make_filter(name);
    for (int p = 1; p <= 3; ++p) {
      Tensor x = wft::random_tensor({64}, rng);
      WaveletCoeffs c = dwt_multilevel(x, f, p);
      CHECK(static_cast<int64_t>(c.packed.numel()) == x.numel());
      Tensor back = idwt_multilevel(c, f);
      INFO(name << " p=" << p);
      CHECK(wft::max_abs_diff(x.data(), back.data()) < 1e-10);
      const double ex = wft::energy(x.data());
      const double ec = wft::energy(c.packed.data());
      CHECK(std::abs(ex - ec) / ex < 1e-9);
    }
  }
}

TEST_CASE("orthonormality: random length-32 energy is preserved (db4, p=2)") {
  RngStream rng(7, 0);
  WaveletFilter f = make_filter("db4");
  Tensor x = wft::random_tensor({32}, rng);
  WaveletCoeffs c = dwt_multilevel(x, f, 2);
  CHECK(std::abs(wft::energy(x.data()) - wft::energy(c.packed.data())) < 1e-10);
}

TEST_CASE("linearity of the transform") {
  RngStream rng(8, 0);
  WaveletFilter f = make_filter("db5");
  Tensor x = wft::random_tensor({32}, rng);
  Tensor y = wft::random_tensor({32}, rng);
  const double a = 1.7, b = -0.4;
  Tensor lin = add(scalar_multiply(x, a), scalar_multiply(y, b));
  WaveletCoeffs cl = dwt_multilevel(lin, f, 2);
  WaveletCoeffs cx = dwt_multilevel(x, f, 2);
  WaveletCoeffs cy = dwt_multilevel(y, f, 2);
  Tensor combo = add(scalar_multiply(cx.packed, a), scalar_multiply(cy.packed, b));
  CHECK(wft::max_abs_diff(cl.packed.data(), combo.data()) < 1e-10);
}

TEST_CASE("all-zero coefficients reconstruct to zero") {
  WaveletFilter f = make_filter("db4");
  WaveletCoeffs c;
  c.packed = Tensor::zeros({32});
  c.levels = 2;
  c.spatial_dims = 1;
  Tensor back = idwt_multilevel(c, f);
  CHECK(wft::max_abs(back.data()) == 0.0);
}

TEST_CASE("length not divisible by 2^p raises BadLength") {
  WaveletFilter f = make_filter("db2");
  RngStream rng(9, 0);
  Tensor x = wft::random_tensor({24}, rng);
  CHECK_THROWS_AS(dwt_multilevel(x, f, 4), Error);  // 24 / 16 not integral
  Tensor odd = wft::random_tensor({10}, rng);
  CHECK_THROWS_AS(dwt_multilevel(odd, f, 2), Error);
}

TEST_CASE("batch and channel axes pass through untouched") {
  RngStream rng(10, 0);
  WaveletFilter f = make_filter("db3");
  Tensor x = wft::random_tensor({3, 5, 16}, rng);
  WaveletCoeffs c = dwt_multilevel(x, f, 2);
  REQUIRE(c.packed.shape() == Shape{3, 5, 16});
  // per-slab transform equals the full transform
  for (int64_t b = 0; b < 3; ++b)
    for (int64_t ch = 0; ch < 5; ++ch) {
      std::vector<double> row(16);
      for (int64_t i = 0; i < 16; ++i) row[i] = x.at({b, ch, i});
      WaveletCoeffs cr = dwt_multilevel(Tensor::from({16}, row), f, 2);
      for (int64_t i = 0; i < 16; ++i)
        CHECK(c.packed.at({b, ch, i}) == doctest::Approx(cr.packed.at({i})).epsilon(1e-14));
    }
}

TEST_CASE("2D: constant image yields scaled approximation and zero details") {
  WaveletFilter f = make_filter("db2");
  Tensor x = Tensor::full({8, 8}, 1.0);
  WaveletCoeffs c = dwt2_multilevel(x, f, 1);
  Tensor a = c.approx();
  REQUIRE(a.shape() == Shape{4, 4});
  for (int64_t i = 0; i < 4; ++i)
    for (int64_t j = 0; j < 4; ++j)
      CHECK(a.at({i, j}) == doctest::Approx(2.0).epsilon(1e-12));
  for (int band = 0; band < 3; ++band)
    CHECK(wft::max_abs(c.detail2(1, band).data()) < 1e-12);
}

TEST_CASE("2D round trip and energy preservation at 64x64") {
  RngStream rng(11, 0);
  for (const char* name : {"db2", "db4", "db6"}) {
    WaveletFilter f = make_filter(name);
    Tensor x = wft::random_tensor({64, 64}, rng);
    for (int p = 1; p <= 3; ++p) {
      WaveletCoeffs c = dwt2_multilevel(x, f, p);
      Tensor back = idwt2_multilevel(c, f);
      INFO(name << " p=" << p);
      CHECK(wft::max_abs_diff(x.data(), back.data()) < 1e-9);
      const double ex = wft::energy(x.data());
      CHECK(std::abs(ex - wft::energy(c.packed.data())) / ex < 1e-9);
    }
  }
}

TEST_CASE("with_approx replaces only the approximation band") {
  RngStream rng(12, 0);
  WaveletFilter f = make_filter("db2");
  Tensor x = wft::random_tensor({16}, rng);
  WaveletCoeffs c = dwt_multilevel(x, f, 2);
  Tensor a2 = Tensor::full({4}, 0.5);
  WaveletCoeffs c2 = c.with_approx(a2);
  CHECK(wft::max_abs_diff(c2.approx().data(), a2.data()) == 0.0);
  CHECK(wft::max_abs_diff(c2.detail(1).data(), c.detail(1).data()) == 0.0);
  CHECK(wft::max_abs_diff(c2.detail(2).data(), c.detail(2).data()) == 0.0);
  CHECK_THROWS_AS(c.with_approx(Tensor::zeros({5})), Error);
}

TEST_CASE("gradient of a dwt -> attention -> idwt composite on a 16-point signal") {
  RngStream rng(21, 0);
  WaveletFilter f = make_filter("db2");
  AttentionParams p;
  p.n_heads = 1;
  p.wq = wft::random_tensor({2, 2}, rng);
  p.wk = wft::random_tensor({2, 2}, rng);
  p.wv = wft::random_tensor({2, 2}, rng);
  p.wo = wft::random_tensor({2, 2}, rng);
  Tensor x = wft::random_signed_tensor({16}, rng);
  auto fn = [&](const Tensor& t) {
    WaveletCoeffs c = dwt_multilevel(t, f, 1);
    Tensor tokens = reshape(c.packed, {8, 2});
    Tensor mixed = scaled_dot_attention(tokens, tokens, p);
    WaveletCoeffs c2 = c;
    c2.packed = reshape(mixed, {16});
    return sum_all(multiply(idwt_multilevel(c2, f), t));
  };
  CHECK(grad_check(fn, x, 1e-5) < 1e-4);
}

TEST_CASE("gradient flows through dwt -> idwt composites") {
  RngStream rng(13, 0);
  WaveletFilter f = make_filter("db3");
  Tensor x = wft::random_signed_tensor({16}, rng);
  auto fn = [&](const Tensor& t) {
    WaveletCoeffs c = dwt_multilevel(t, f, 2);
    Tensor approx = c.approx();
    WaveletCoeffs c2 = c.with_approx(gelu(approx));
    return sum_all(multiply(idwt_multilevel(c2, f), t));
  };
  CHECK(grad_check(fn, x, 1e-5) < 1e-4);

  Tensor img = wft::random_signed_tensor({8, 8}, rng);
  auto fn2 = [&](const Tensor& t) {
    WaveletCoeffs c = dwt2_multilevel(t, f, 1);
    return sum_all(gelu(idwt2_multilevel(c, f)));
  };
  CHECK(grad_check(fn2, img, 1e-5) < 1e-4);
}
