#include "waveformer/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>

#include "waveformer/fft.hpp"
#include "waveformer/io.hpp"

namespace wf {

namespace {

void check_frame_finite(std::span<const double> u, int64_t step, const char* pde) {
  for (double v : u)
    if (!std::isfinite(v))
      raise(errc::unstable, std::string(pde) + " solver went unstable at step " +
                                std::to_string(step));
}

// Tridiagonal solve with constant coefficients, Dirichlet ends.
void thomas_const(double sub, double diag, double sup, std::vector<double>& d,
                  std::vector<double>& cp) {
  const size_t n = d.size();
  cp.resize(n);
  cp[0] = sup / diag;
  d[0] = d[0] / diag;
  for (size_t i = 1; i < n; ++i) {
    const double m = 1.0 / (diag - sub * cp[i - 1]);
    cp[i] = sup * m;
    d[i] = (d[i] - sub * d[i - 1]) * m;
  }
  for (size_t i = n - 1; i-- > 0;) d[i] -= cp[i] * d[i + 1];
}

// Cyclic constant-coefficient tridiagonal via Sherman-Morrison.
void cyclic_thomas_const(double sub, double diag, double sup, std::vector<double>& d,
                         std::vector<double>& y, std::vector<double>& z,
                         std::vector<double>& cp) {
  const size_t n = d.size();
  const double gamma = -diag;
  y = d;
  y[0] -= 0.0;
  std::vector<double>& rhs = y;
  // modified diagonal system solved twice with different right-hand sides
  auto solve_mod = [&](std::vector<double>& b) {
    // diag' varies at the two ends; reuse scalar Thomas with explicit firsts
    const double b0 = diag - gamma;
    const double bn = diag - sub * sup / gamma;
    cp.resize(n);
    cp[0] = sup / b0;
    b[0] = b[0] / b0;
    for (size_t i = 1; i < n; ++i) {
      const double di = (i == n - 1) ? bn : diag;
      const double m = 1.0 / (di - sub * cp[i - 1]);
      cp[i] = sup * m;
      b[i] = (b[i] - sub * b[i - 1]) * m;
    }
    for (size_t i = n - 1; i-- > 0;) b[i] -= cp[i] * b[i + 1];
  };
  solve_mod(rhs);
  z.assign(n, 0.0);
  z[0] = gamma;
  z[n - 1] = sup;
  solve_mod(z);
  const double vy = rhs[0] + (sub / gamma) * rhs[n - 1];
  const double vz = z[0] + (sub / gamma) * z[n - 1];
  const double factor = vy / (1.0 + vz);
  for (size_t i = 0; i < n; ++i) d[i] = rhs[i] - factor * z[i];
}

}  // namespace

// ---- Burgers -----------------------------------------------------------------------

std::vector<double> burgers_initial_condition(const Grid& grid, RngStream& rng) {
  const int64_t n = grid.extents[0];
  const double zeta = rng.uniform(0.5, 1.5);
  const double eta = rng.uniform(0.5, 1.5);
  std::vector<double> u0(n);
  for (int64_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) * grid.dx(0);
    u0[i] = std::cos(zeta * M_PI * x) + std::sin(eta * M_PI * x);
  }
  return u0;
}

Trajectory burgers_solve(std::span<const double> u0, const Grid& grid,
                         const BurgersOptions& opt) {
  grid.validate();
  if (grid.dim != 1) raise(errc::bad_value, "burgers is one-dimensional");
  const int64_t n = grid.extents[0];
  if (static_cast<int64_t>(u0.size()) != n)
    raise(errc::shape_mismatch, "initial condition length mismatch");
  if (opt.frames < 2) raise(errc::too_short, "need at least 2 stored frames");
  const double h = grid.dx(0);
  const double dt = opt.dt;
  const double c = opt.nu * dt / (2.0 * h * h);  // CN coefficient
  const bool periodic = opt.bc == BurgersBc::Periodic;

  std::vector<double> u(u0.begin(), u0.end());
  if (!periodic) u[0] = 0.0;  // boundary node pinned, ghost at x=1 is 0

  auto advection = [&](const std::vector<double>& v, std::vector<double>& adv) {
    // conservative form -(v^2/2)_x, central differences
    const double inv = 1.0 / (4.0 * h);
    if (periodic) {
      for (int64_t i = 0; i < n; ++i) {
        const double fp = v[(i + 1) % n] * v[(i + 1) % n];
        const double fm = v[(i - 1 + n) % n] * v[(i - 1 + n) % n];
        adv[i] = -(fp - fm) * inv;
      }
    } else {
      adv[0] = 0.0;
      for (int64_t i = 1; i < n; ++i) {
        const double vp = (i + 1 < n) ? v[i + 1] : 0.0;  // ghost u(1) = 0
        const double fp = vp * vp;
        const double fm = v[i - 1] * v[i - 1];
        adv[i] = -(fp - fm) * inv;
      }
    }
  };

  Trajectory out;
  out.grid = grid;
  out.pde = "burgers";
  out.dt_stored = dt * static_cast<double>(opt.store_every);
  out.params["nu"] = std::to_string(opt.nu);
  out.params["dt"] = std::to_string(opt.dt);
  out.params["bc"] = periodic ? "periodic" : "dirichlet";
  out.fields.reserve(opt.frames * n);
  out.fields.insert(out.fields.end(), u.begin(), u.end());

  std::vector<double> adv(n), adv_prev(n), rhs, scratch, y, z;
  bool have_prev = false;
  const int64_t total_steps = (opt.frames - 1) * opt.store_every;
  for (int64_t step = 1; step <= total_steps; ++step) {
    advection(u, adv);
    if (periodic) {
      rhs.assign(n, 0.0);
      for (int64_t i = 0; i < n; ++i) {
        const double lap = u[(i + 1) % n] - 2.0 * u[i] + u[(i - 1 + n) % n];
        const double ab = have_prev ? 1.5 * adv[i] - 0.5 * adv_prev[i] : adv[i];
        rhs[i] = u[i] + c * lap + dt * ab;
      }
      cyclic_thomas_const(-c, 1.0 + 2.0 * c, -c, rhs, y, z, scratch);
      u = rhs;
    } else {
      // interior unknowns 1..n-1, u[0] = 0, ghost u[n] = 0
      rhs.assign(n - 1, 0.0);
      for (int64_t i = 1; i < n; ++i) {
        const double up = (i + 1 < n) ? u[i + 1] : 0.0;
        const double lap = up - 2.0 * u[i] + u[i - 1];
        const double ab = have_prev ? 1.5 * adv[i] - 0.5 * adv_prev[i] : adv[i];
        rhs[i - 1] = u[i] + c * lap + dt * ab;
      }
      thomas_const(-c, 1.0 + 2.0 * c, -c, rhs, scratch);
      for (int64_t i = 1; i < n; ++i) u[i] = rhs[i - 1];
      u[0] = 0.0;
    }
    adv_prev = adv;
    have_prev = true;
    if (step % opt.store_every == 0) {
      check_frame_finite(u, step, "burgers");
      out.fields.insert(out.fields.end(), u.begin(), u.end());
    }
  }
  out.timesteps = opt.frames;
  return out;
}

// ---- Kuramoto-Sivashinsky ------------------------------------------------------------

std::vector<double> ks_initial_condition(const Grid& grid, RngStream& rng) {
  const int64_t n = grid.extents[0];
  const double L = grid.lengths[0];
  const double k0 = std::floor(L / (2.0 * M_PI * std::sqrt(2.0)) + 0.5);
  const double l = L / (2.0 * k0);
  const double lambda2 = rng.normal() * std::sqrt(2.0);
  const double phase = 2.0 * M_PI * rng.uniform();
  const double c = rng.normal() * std::sqrt(0.5) + 2.5;
  const double lambda[3] = {1.0, lambda2, 1.0};
  std::vector<double> w(n);
  for (int64_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) * grid.dx(0);
    double s = 0.0;
    for (int m = 1; m <= 3; ++m)
      s += lambda[m - 1] / static_cast<double>(m) *
           std::sin(static_cast<double>(m) * M_PI * x / l + phase);
    w[i] = s;
  }
  const auto [mn_it, mx_it] = std::minmax_element(w.begin(), w.end());
  const double mn = *mn_it, mx = *mx_it;
  if (mx == mn) raise(errc::degenerate_field, "flat initial profile");
  std::vector<double> u(n);
  for (int64_t i = 0; i < n; ++i) u[i] = 2.0 * c * (w[i] - mn) / (mx - mn) - c;
  return u;
}

Trajectory ks_solve_etdrk4(std::span<const double> u0, const Grid& grid,
                           const KsOptions& opt) {
  grid.validate();
  if (grid.dim != 1) raise(errc::bad_value, "ks is one-dimensional");
  const int64_t n = grid.extents[0];
  if (static_cast<int64_t>(u0.size()) != n)
    raise(errc::shape_mismatch, "initial condition length mismatch");
  const double L = grid.lengths[0];
  const double dt = opt.dt;

  std::vector<double> k(n), lin(n);
  for (int64_t m = 0; m < n; ++m) {
    k[m] = 2.0 * M_PI * static_cast<double>(fft_freq(m, n)) / L;
    lin[m] = k[m] * k[m] - opt.nu * k[m] * k[m] * k[m] * k[m];
  }

  // phi-functions by 32-point contour integration on the half circle
  constexpr int M = 32;
  std::vector<double> E(n), E2(n), Q(n), f1(n), f2(n), f3(n);
  for (int64_t m = 0; m < n; ++m) {
    E[m] = std::exp(dt * lin[m]);
    E2[m] = std::exp(0.5 * dt * lin[m]);
    cplx q(0.0), a1(0.0), a2(0.0), a3(0.0);
    for (int j = 0; j < M; ++j) {
      const double th = M_PI * (static_cast<double>(j) + 0.5) / M;
      const cplx r(std::cos(th), std::sin(th));
      const cplx lr = dt * lin[m] + r;
      const cplx elr = std::exp(lr);
      const cplx elr2 = std::exp(0.5 * lr);
      const cplx lr2 = lr * lr;
      const cplx lr3 = lr2 * lr;
      q += (elr2 - 1.0) / lr;
      a1 += (-4.0 - lr + elr * (4.0 - 3.0 * lr + lr2)) / lr3;
      a2 += (2.0 + lr + elr * (-2.0 + lr)) / lr3;
      a3 += (-4.0 - 3.0 * lr - lr2 + elr * (4.0 - lr)) / lr3;
    }
    Q[m] = dt * q.real() / M;
    f1[m] = dt * a1.real() / M;
    f2[m] = dt * a2.real() / M;
    f3[m] = dt * a3.real() / M;
  }

  // 2/3-rule dealiasing on the quadratic term
  const int64_t kmax = n / 3;
  std::vector<double> g_im(n);  // N(u) = -0.5 i k fft(u^2): imaginary multiplier
  for (int64_t m = 0; m < n; ++m) {
    const bool keep = std::abs(fft_freq(m, n)) <= kmax;
    g_im[m] = (keep && !opt.disable_nonlinearity) ? -0.5 * k[m] : 0.0;
  }

  std::vector<cplx> v(n);
  {
    std::vector<cplx> tmp(u0.begin(), u0.end());
    fft(tmp, false);
    v = tmp;
  }

  auto nonlinear = [&](const std::vector<cplx>& spec, std::vector<cplx>& out) {
    std::vector<cplx> tmp = spec;
    fft(tmp, true);
    for (int64_t i = 0; i < n; ++i) {
      const double u = tmp[i].real();
      tmp[i] = cplx(u * u, 0.0);
    }
    fft(tmp, false);
    for (int64_t m = 0; m < n; ++m)
      out[m] = cplx(0.0, g_im[m]) * tmp[m];
  };

  Trajectory out;
  out.grid = grid;
  out.pde = "ks";
  out.dt_stored = dt;
  out.params["nu"] = std::to_string(opt.nu);
  out.params["dt"] = std::to_string(opt.dt);
  out.params["L"] = std::to_string(L);
  out.params["transient_skip"] = std::to_string(opt.transient_skip);
  out.fields.reserve(opt.frames * n);

  std::vector<cplx> Nv(n), Na(n), Nb(n), Nc(n), a(n), b(n), cc(n);
  std::vector<double> u(n);
  auto store = [&](int64_t step) {
    std::vector<cplx> tmp = v;
    fft(tmp, true);
    for (int64_t i = 0; i < n; ++i) u[i] = tmp[i].real();
    check_frame_finite(u, step, "ks");
    out.fields.insert(out.fields.end(), u.begin(), u.end());
  };

  const int64_t total = opt.transient_skip + opt.frames - 1;
  if (opt.transient_skip == 0) store(0);
  for (int64_t step = 1; step <= total; ++step) {
    nonlinear(v, Nv);
    for (int64_t m = 0; m < n; ++m) a[m] = E2[m] * v[m] + Q[m] * Nv[m];
    nonlinear(a, Na);
    for (int64_t m = 0; m < n; ++m) b[m] = E2[m] * v[m] + Q[m] * Na[m];
    nonlinear(b, Nb);
    for (int64_t m = 0; m < n; ++m)
      cc[m] = E2[m] * a[m] + Q[m] * (2.0 * Nb[m] - Nv[m]);
    nonlinear(cc, Nc);
    for (int64_t m = 0; m < n; ++m)
      v[m] = E[m] * v[m] + f1[m] * Nv[m] + 2.0 * f2[m] * (Na[m] + Nb[m]) + f3[m] * Nc[m];
    if (step >= opt.transient_skip) store(step);
  }
  out.timesteps = opt.frames;
  return out;
}

// ---- Allen-Cahn ------------------------------------------------------------------------

Trajectory allen_cahn_solve(std::span<const double> u0, const Grid& grid,
                            const AllenCahnOptions& opt) {
  grid.validate();
  if (grid.dim != 2) raise(errc::bad_value, "allen-cahn is two-dimensional");
  const int64_t n1 = grid.extents[0], n2 = grid.extents[1];
  const int64_t np = n1 * n2;
  if (static_cast<int64_t>(u0.size()) != np)
    raise(errc::shape_mismatch, "initial condition size mismatch");
  const double dt = opt.dt;

  std::vector<double> ksq(np);
  for (int64_t i = 0; i < n1; ++i) {
    const double kx = 2.0 * M_PI * static_cast<double>(fft_freq(i, n1)) / grid.lengths[0];
    for (int64_t j = 0; j < n2; ++j) {
      const double ky = 2.0 * M_PI * static_cast<double>(fft_freq(j, n2)) / grid.lengths[1];
      ksq[i * n2 + j] = kx * kx + ky * ky;
    }
  }

  std::vector<cplx> w(u0.begin(), u0.end());
  fft_2d(w, n1, n2, false);

  Trajectory out;
  out.grid = grid;
  out.pde = "allen-cahn";
  out.dt_stored = dt * static_cast<double>(opt.store_every);
  out.params["eps"] = std::to_string(opt.eps);
  out.params["dt"] = std::to_string(opt.dt);
  out.fields.reserve(opt.frames * np);

  std::vector<double> u(np);
  auto to_physical = [&](const std::vector<cplx>& spec) {
    std::vector<cplx> tmp = spec;
    fft_2d(tmp, n1, n2, true);
    for (int64_t i = 0; i < np; ++i) u[i] = tmp[i].real();
  };

  to_physical(w);
  check_frame_finite(u, 0, "allen-cahn");
  out.fields.insert(out.fields.end(), u.begin(), u.end());

  std::vector<cplx> react(np), react_prev(np);
  bool have_prev = false;
  const int64_t total = (opt.frames - 1) * opt.store_every;
  for (int64_t step = 1; step <= total; ++step) {
    to_physical(w);
    std::vector<cplx> r(np);
    for (int64_t i = 0; i < np; ++i) {
      const double x = u[i];
      r[i] = cplx(x - x * x * x, 0.0);
    }
    fft_2d(r, n1, n2, false);
    react = r;
    for (int64_t i = 0; i < np; ++i) {
      const double a = 0.5 * opt.eps * dt * ksq[i];
      const cplx ab = have_prev ? 1.5 * react[i] - 0.5 * react_prev[i] : react[i];
      w[i] = ((1.0 - a) * w[i] + dt * ab) / (1.0 + a);
    }
    react_prev = react;
    have_prev = true;
    if (step % opt.store_every == 0) {
      to_physical(w);
      check_frame_finite(u, step, "allen-cahn");
      out.fields.insert(out.fields.end(), u.begin(), u.end());
    }
  }
  out.timesteps = opt.frames;
  return out;
}

// ---- Navier-Stokes ------------------------------------------------------------------------

Trajectory navier_stokes_solve(std::span<const double> w0, const Grid& grid,
                               const NavierStokesOptions& opt) {
  grid.validate();
  if (grid.dim != 2) raise(errc::bad_value, "navier-stokes is two-dimensional");
  const int64_t n1 = grid.extents[0], n2 = grid.extents[1];
  const int64_t np = n1 * n2;
  if (static_cast<int64_t>(w0.size()) != np)
    raise(errc::shape_mismatch, "initial vorticity size mismatch");
  const double dt = opt.dt;

  std::vector<double> kx(n1), ky(n2);
  for (int64_t i = 0; i < n1; ++i)
    kx[i] = 2.0 * M_PI * static_cast<double>(fft_freq(i, n1)) / grid.lengths[0];
  for (int64_t j = 0; j < n2; ++j)
    ky[j] = 2.0 * M_PI * static_cast<double>(fft_freq(j, n2)) / grid.lengths[1];
  std::vector<double> ksq(np);
  std::vector<char> dealias(np);
  for (int64_t i = 0; i < n1; ++i)
    for (int64_t j = 0; j < n2; ++j) {
      ksq[i * n2 + j] = kx[i] * kx[i] + ky[j] * ky[j];
      dealias[i * n2 + j] = std::abs(fft_freq(i, n1)) <= n1 / 3 &&
                            std::abs(fft_freq(j, n2)) <= n2 / 3;
    }

  // constant forcing 0.1 (sin(2 pi (x+y)) + cos(2 pi (x+y)))
  std::vector<cplx> f_hat(np, cplx(0.0, 0.0));
  if (opt.forced) {
    std::vector<cplx> f(np);
    double mean = 0.0;
    for (int64_t i = 0; i < n1; ++i)
      for (int64_t j = 0; j < n2; ++j) {
        const double x = static_cast<double>(i) / static_cast<double>(n1);
        const double y = static_cast<double>(j) / static_cast<double>(n2);
        const double val = 0.1 * (std::sin(2.0 * M_PI * (x + y)) +
                                  std::cos(2.0 * M_PI * (x + y)));
        f[i * n2 + j] = val;
        mean += val;
      }
    mean /= static_cast<double>(np);
    if (std::abs(mean) > 1e-8)
      std::cerr << "warning: NonZeroMeanForcing (mean = " << mean
                << "); mean vorticity will drift\n";
    fft_2d(f, n1, n2, false);
    f_hat = f;
  }

  std::vector<cplx> w(w0.begin(), w0.end());
  fft_2d(w, n1, n2, false);

  Trajectory out;
  out.grid = grid;
  out.pde = "navier-stokes";
  out.dt_stored = dt * static_cast<double>(opt.store_every);
  out.params["nu"] = std::to_string(opt.nu);
  out.params["dt"] = std::to_string(opt.dt);
  out.params["forced"] = opt.forced ? "1" : "0";
  out.params["transient_frames"] = std::to_string(opt.transient_frames);
  out.fields.reserve(opt.frames * np);

  std::vector<double> u(np);
  auto to_physical = [&](const std::vector<cplx>& spec, std::vector<double>& dst) {
    std::vector<cplx> tmp = spec;
    fft_2d(tmp, n1, n2, true);
    for (int64_t i = 0; i < np; ++i) dst[i] = tmp[i].real();
  };

  std::vector<cplx> nl(np), nl_prev(np);
  std::vector<cplx> psi(np), t1(np), t2(np), t3(np), t4(np);
  std::vector<double> ux(np), uy(np), wx(np), wy(np);

  auto nonlinear = [&](const std::vector<cplx>& spec, std::vector<cplx>& out_nl) {
    for (int64_t i = 0; i < n1; ++i)
      for (int64_t j = 0; j < n2; ++j) {
        const int64_t m = i * n2 + j;
        const cplx p = ksq[m] > 0.0 ? spec[m] / ksq[m] : cplx(0.0, 0.0);
        psi[m] = p;
        t1[m] = cplx(0.0, ky[j]) * p;        // u = d(psi)/dy
        t2[m] = cplx(0.0, -kx[i]) * p;       // v = -d(psi)/dx
        t3[m] = cplx(0.0, kx[i]) * spec[m];  // w_x
        t4[m] = cplx(0.0, ky[j]) * spec[m];  // w_y
      }
    to_physical(t1, ux);
    to_physical(t2, uy);
    to_physical(t3, wx);
    to_physical(t4, wy);
    std::vector<cplx> adv(np);
    for (int64_t m = 0; m < np; ++m)
      adv[m] = cplx(-(ux[m] * wx[m] + uy[m] * wy[m]), 0.0);
    fft_2d(adv, n1, n2, false);
    for (int64_t m = 0; m < np; ++m)
      out_nl[m] = dealias[m] ? adv[m] : cplx(0.0, 0.0);
  };

  bool have_prev = false;
  int64_t stored = 0;
  const int64_t total_frames = opt.transient_frames + opt.frames;
  for (int64_t frame = 0; frame < total_frames; ++frame) {
    if (frame > 0) {
      for (int64_t s = 0; s < opt.store_every; ++s) {
        nonlinear(w, nl);
        for (int64_t m = 0; m < np; ++m) {
          const double a = 0.5 * opt.nu * dt * ksq[m];
          const cplx ab = have_prev ? 1.5 * nl[m] - 0.5 * nl_prev[m] : nl[m];
          w[m] = ((1.0 - a) * w[m] + dt * (ab + f_hat[m])) / (1.0 + a);
        }
        nl_prev = nl;
        have_prev = true;
      }
    }
    if (frame >= opt.transient_frames) {
      to_physical(w, u);
      check_frame_finite(u, frame, "navier-stokes");
      out.fields.insert(out.fields.end(), u.begin(), u.end());
      ++stored;
    }
  }
  out.timesteps = stored;
  return out;
}

// ---- Gaussian random fields -------------------------------------------------------------

void GrfSpec::validate(int dim) const {
  if (!(tau > 0.0)) raise(errc::bad_value, "grf tau must be positive");
  if (!(exponent > static_cast<double>(dim) / 2.0))
    raise(errc::bad_value, "grf exponent must exceed dim/2 for finite variance");
  if (!(amplitude > 0.0)) raise(errc::bad_value, "grf amplitude must be positive");
}

std::vector<double> grf_sample(const GrfSpec& spec, const Grid& grid,
                               uint64_t seed, uint64_t stream) {
  grid.validate();
  spec.validate(grid.dim);
  const int64_t np = grid.points();
  RngStream rng(seed, stream);
  std::vector<cplx> white(np);
  for (int64_t i = 0; i < np; ++i) white[i] = cplx(rng.normal(), 0.0);

  const double tau_pow = std::pow(spec.tau, spec.alpha - 1.0);
  if (grid.dim == 1) {
    const int64_t n = grid.extents[0];
    fft(white, false);
    for (int64_t m = 0; m < n; ++m) {
      const double kk = static_cast<double>(fft_freq(m, n));
      const double sigma =
          spec.amplitude * tau_pow *
          std::pow(M_PI * M_PI * kk * kk + spec.tau * spec.tau, -spec.exponent / 2.0);
      white[m] *= sigma;
    }
    white[0] = 0.0;  // zero mean
    fft(white, true);
  } else {
    const int64_t n1 = grid.extents[0], n2 = grid.extents[1];
    fft_2d(white, n1, n2, false);
    for (int64_t i = 0; i < n1; ++i)
      for (int64_t j = 0; j < n2; ++j) {
        const double k1 = static_cast<double>(fft_freq(i, n1));
        const double k2 = static_cast<double>(fft_freq(j, n2));
        const double sigma =
            spec.amplitude * tau_pow *
            std::pow(M_PI * M_PI * (k1 * k1 + k2 * k2) + spec.tau * spec.tau,
                     -spec.exponent / 2.0);
        white[i * n2 + j] *= sigma;
      }
    white[0] = 0.0;
    fft_2d(white, n1, n2, true);
  }
  std::vector<double> out(np);
  for (int64_t i = 0; i < np; ++i) out[i] = white[i].real();
  return out;
}

// ---- presets and dataset assembly ----------------------------------------------------------

GenConfig gen_preset(const std::string& pde, const std::string& preset) {
  const bool paper = preset == "paper";
  if (!paper && preset != "desk")
    raise(errc::bad_value, "preset must be desk or paper");
  GenConfig cfg;
  cfg.pde = pde;
  cfg.paper_scale = paper;
  if (pde == "burgers") {
    cfg.grid = {1, {60}, {1.0}};
    if (paper) {
      cfg.burgers = {0.1, 1.0 / 3600.0, 20, 180, BurgersBc::Dirichlet};
      cfg.resample_to = 0;
    } else {
      cfg.burgers = {0.1, 1.0 / 2400.0, 20, 120, BurgersBc::Dirichlet};
      cfg.resample_to = 64;
    }
  } else if (pde == "ks") {
    cfg.grid = {1, {101}, {22.0 * M_PI}};
    cfg.ks.nu = 1.0;
    cfg.ks.dt = 0.1;
    cfg.ks.transient_skip = 700;
    cfg.ks.frames = paper ? 320 : 240;
    cfg.resample_to = paper ? 0 : 96;
  } else if (pde == "allen-cahn") {
    cfg.grid = paper ? Grid{2, {64, 64}, {1.0, 1.0}} : Grid{2, {32, 32}, {1.0, 1.0}};
    cfg.allen_cahn.eps = 1e-3;
    cfg.allen_cahn.dt = 1e-3;
    cfg.allen_cahn.store_every = 40;
    cfg.allen_cahn.frames = paper ? 120 : 40;
    cfg.grf = {15.0, 1.0, 2.5, 1.0};
  } else if (pde == "navier-stokes") {
    cfg.grid = {2, {64, 64}, {1.0, 1.0}};
    if (paper) {
      cfg.navier_stokes = {1e-3, 1e-4, 5000, 86, 50, true};
    } else {
      cfg.navier_stokes = {1e-3, 1e-3, 250, 36, 4, true};
    }
    cfg.grf = {7.0, 1.0, 2.5, std::pow(7.0, 1.5)};
  } else {
    raise(errc::bad_value, "unknown pde '" + pde + "'");
  }
  return cfg;
}

TrajectoryDataset build_dataset(const GenConfig& cfg, int64_t n_samples,
                                uint64_t seed) {
  if (n_samples < 1) raise(errc::bad_value, "need at least one sample");
  cfg.grid.validate();
  TrajectoryDataset ds;
  for (int64_t s = 0; s < n_samples; ++s) {
    RngStream rng(seed, static_cast<uint64_t>(s));
    Trajectory t;
    if (cfg.pde == "burgers") {
      const auto u0 = burgers_initial_condition(cfg.grid, rng);
      t = burgers_solve(u0, cfg.grid, cfg.burgers);
    } else if (cfg.pde == "ks") {
      const auto u0 = ks_initial_condition(cfg.grid, rng);
      t = ks_solve_etdrk4(u0, cfg.grid, cfg.ks);
    } else if (cfg.pde == "allen-cahn") {
      const auto u0 = grf_sample(cfg.grf, cfg.grid, seed, static_cast<uint64_t>(s));
      t = allen_cahn_solve(u0, cfg.grid, cfg.allen_cahn);
    } else if (cfg.pde == "navier-stokes") {
      const auto w0 = grf_sample(cfg.grf, cfg.grid, seed, static_cast<uint64_t>(s));
      t = navier_stokes_solve(w0, cfg.grid, cfg.navier_stokes);
    } else {
      raise(errc::bad_value, "unknown pde '" + cfg.pde + "'");
    }
    t.seed = seed;
    if (cfg.resample_to > 0 && cfg.grid.dim == 1 &&
        cfg.resample_to != cfg.grid.extents[0])
      t = resample_trajectory(t, cfg.resample_to);
    ds.append(t);
  }
  ds.seed = seed;
  ds.paper_scale = cfg.paper_scale;
  std::map<std::string, std::string> meta;
  meta["pde"] = cfg.pde;
  meta["paper_scale"] = cfg.paper_scale ? "1" : "0";
  if (cfg.pde == "burgers") {
    meta["nu"] = std::to_string(cfg.burgers.nu);
    meta["dt"] = std::to_string(cfg.burgers.dt);
    meta["bc"] = cfg.burgers.bc == BurgersBc::Periodic ? "periodic" : "dirichlet";
  } else if (cfg.pde == "ks") {
    meta["nu"] = std::to_string(cfg.ks.nu);
    meta["dt"] = std::to_string(cfg.ks.dt);
    meta["transient_skip"] = std::to_string(cfg.ks.transient_skip);
  } else if (cfg.pde == "allen-cahn") {
    meta["eps"] = std::to_string(cfg.allen_cahn.eps);
    meta["dt"] = std::to_string(cfg.allen_cahn.dt);
    meta["grf_tau"] = std::to_string(cfg.grf.tau);
    meta["grf_exponent"] = std::to_string(cfg.grf.exponent);
  } else if (cfg.pde == "navier-stokes") {
    meta["nu"] = std::to_string(cfg.navier_stokes.nu);
    meta["dt"] = std::to_string(cfg.navier_stokes.dt);
    meta["transient_frames"] = std::to_string(cfg.navier_stokes.transient_frames);
    meta["grf_tau"] = std::to_string(cfg.grf.tau);
    meta["grf_amplitude"] = std::to_string(cfg.grf.amplitude);
  }
  if (cfg.resample_to > 0 && cfg.grid.dim == 1 &&
      cfg.resample_to != cfg.grid.extents[0])
    meta["resampled_from"] = std::to_string(cfg.grid.extents[0]);
  ds.params_text = params_to_text(meta);
  return ds;
}

}  // namespace wf
