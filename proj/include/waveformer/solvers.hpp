#pragma once

#include "waveformer/dataset.hpp"
#include "waveformer/rng.hpp"

namespace wf {

// ---- Burgers: u_t + u u_x = nu u_xx on (0,1) ------------------------------------

enum class BurgersBc { Dirichlet, Periodic };

struct BurgersOptions {
  double nu = 0.1;
  double dt = 1.0 / 2400.0;
  int64_t store_every = 20;  // solver steps per stored frame
  int64_t frames = 120;      // stored frames (frame 0 is the initial condition)
  BurgersBc bc = BurgersBc::Dirichlet;
};

/// Crank-Nicolson diffusion (tridiagonal) + Adams-Bashforth-2 conservative
/// advection -(u^2/2)_x on a uniform grid over [0,1).
Trajectory burgers_solve(std::span<const double> u0, const Grid& grid,
                         const BurgersOptions& opt);

std::vector<double> burgers_initial_condition(const Grid& grid, RngStream& rng);

// ---- Kuramoto-Sivashinsky: u_t + u u_x + u_xx + nu u_xxxx = 0 ---------------------

struct KsOptions {
  double nu = 1.0;
  double dt = 0.1;
  int64_t frames = 240;          // stored frames after the transient
  int64_t transient_skip = 700;  // leading frames dropped
  bool disable_nonlinearity = false;  // linear-operator verification mode
};

/// Fourier-space ETDRK4 with 2/3-rule dealiasing; the phi-functions are
/// evaluated by a 32-point unit-circle contour integral for stability near
/// zero eigenvalues.
Trajectory ks_solve_etdrk4(std::span<const double> u0, const Grid& grid,
                           const KsOptions& opt);

/// u(x,0) = 2c (b - min b)/(max b - min b) - c with
/// b(x) = sum_{n=1..3} (lambda_n / n) sin(n pi x / l + phase),
/// lambda = [1, N(0,2), 1], phase = 2 pi U[0,1], c = N(0,0.5) + 2.5,
/// l = L / (2 k0), k0 = floor(L / (2 pi sqrt(2)) + 0.5).
std::vector<double> ks_initial_condition(const Grid& grid, RngStream& rng);

// ---- Allen-Cahn: u_t = eps lap(u) + u - u^3, periodic (0,1)^2 ---------------------

struct AllenCahnOptions {
  double eps = 1e-3;
  double dt = 1e-3;
  int64_t store_every = 40;
  int64_t frames = 40;
};

/// Fourier-space semi-implicit scheme: Crank-Nicolson for eps*lap, AB2 for
/// the u - u^3 reaction.
Trajectory allen_cahn_solve(std::span<const double> u0, const Grid& grid,
                            const AllenCahnOptions& opt);

// ---- Navier-Stokes (vorticity form), periodic (0,1)^2 -----------------------------

struct NavierStokesOptions {
  double nu = 1e-3;
  double dt = 1e-3;
  int64_t store_every = 250;    // solver steps per stored frame
  int64_t frames = 36;          // frames kept after the transient
  int64_t transient_frames = 4; // leading stored frames dropped
  bool forced = true;           // f = 0.1 (sin(2 pi (x+y)) + cos(2 pi (x+y)))
};

/// Pseudo-spectral: streamfunction velocity (lap psi = -w, u = perp grad psi),
/// 2/3-dealiased AB2 advection, Crank-Nicolson diffusion. Mean vorticity is
/// conserved when the forcing has zero mean.
Trajectory navier_stokes_solve(std::span<const double> w0, const Grid& grid,
                               const NavierStokesOptions& opt);

// ---- Gaussian random fields --------------------------------------------------------

struct GrfSpec {
  double tau = 15.0;
  double alpha = 1.0;
  double exponent = 2.5;  // spectral decay; per-mode std ~ (pi^2|k|^2 + tau^2)^(-exponent/2)
  double amplitude = 1.0;

  void validate(int dim) const;
};

/// Spectral sampling: white noise on the grid, filtered per mode by
/// amplitude * tau^(alpha-1) * (pi^2 |k|^2 + tau^2)^(-exponent/2), zero mean.
/// Bit-identical for equal (seed, stream) pairs.
std::vector<double> grf_sample(const GrfSpec& spec, const Grid& grid,
                               uint64_t seed, uint64_t stream);

// ---- dataset generation --------------------------------------------------------------

struct GenConfig {
  std::string pde;          // burgers | ks | allen-cahn | navier-stokes
  bool paper_scale = false;
  Grid grid;
  int64_t resample_to = 0;  // 1D spectral resampling target (0 = keep)
  BurgersOptions burgers;
  KsOptions ks;
  AllenCahnOptions allen_cahn;
  NavierStokesOptions navier_stokes;
  GrfSpec grf;
};

GenConfig gen_preset(const std::string& pde, const std::string& preset);

/// Generates n_samples trajectories with per-sample derived seeds, applies
/// transient trimming and optional spectral resampling, and records the
/// generation metadata.
TrajectoryDataset build_dataset(const GenConfig& cfg, int64_t n_samples,
                                uint64_t seed);

}  // namespace wf
