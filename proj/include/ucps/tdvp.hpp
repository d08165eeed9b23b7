// Time-dependent variational principle for uniform correlator product
// states. Tangent vectors live in the left gauge and are parametrised by a
// (D-1) x D coefficient matrix B against the transfer-matrix eigenbasis:
//   dC_ij = sum_{a>=2, b} B_ab vr^a_i vl^b_j / conj(C_ij).
// The Gram matrix and its approximate inverse act on B in O(D^3) through
// sandwiches with the eigenvector matrices; the energy gradient enumerates,
// for every block Hamiltonian term, the conjugate-tangent placements on the
// term's blocks plus the geometric tail strictly to the right, which the
// transfer spectrum sums in closed form.
#pragma once

#include <functional>
#include <optional>
#include <string>

#include "ucps/models.hpp"
#include "ucps/state.hpp"

namespace ucps {

// dC from tangent coefficients B ((D-1) x D). Elementwise divisions by
// conj(C) are regularised at 1e-12 of the median magnitude; clamped entries
// increment *clamp_count.
Matrix tangent_to_dC(const UcpsState& state, const SpectralEnvironment& env,
                     const Matrix& B, long* clamp_count = nullptr);

// Gram-matrix action: (G B)_{cd} = sum_ij conj(vr^c_i vl^d_j) lambda_ij
// (sum_ab vr^a_i vl^b_j B_ab), with weights lambda_ij = vl_i vr_j / E_ij.
Matrix gram_apply(const UcpsState& state, const SpectralEnvironment& env,
                  const Matrix& B, long* clamp_count = nullptr);

// Approximate-inverse action built from the biorthogonal dual family with
// weights 1/lambda_ij; used to precondition BiCGStab. Exact inverse whenever
// the elementwise weight preserves the span of the sandwich factors.
Matrix precond_apply(const UcpsState& state, const SpectralEnvironment& env,
                     const Matrix& B, long* clamp_count = nullptr);

// Energy gradient F_{cd} = <d_{conj(B_cd)} psi| (H - shift) |psi> per block,
// assembled from one-block and boundary terms. H.energy_shift should hold the
// current per-block energy; the geometric tail drops the dominant transfer
// component explicitly, so a slightly stale shift only costs conditioning.
// Requires a normalised state (|lambda1 - 1| <= 1e-6).
Matrix rhs_gradient(const UcpsState& state, const SpectralEnvironment& env,
                    const BlockHamiltonian& H, long* clamp_count = nullptr);

// Per-block energy expectation of H (shift not subtracted).
double block_energy(const UcpsState& state, const SpectralEnvironment& env,
                    const BlockHamiltonian& H);

struct SolverOptions {
  double bicgstab_tol = 1e-10;
  int bicgstab_max_iter = 500;
};

struct TdvpStepReport {
  double energy = 0.0;          // per-site energy before the step
  double gradient_norm = 0.0;   // Frobenius norm of F
  int bicgstab_iters = 0;       // spent by the accepted solve (-1: fallback)
  double dt_used = 0.0;
  double renormalisation_factor = 1.0;  // scalar C was divided by
  long clamps = 0;              // regularised-division clamps this step
  int solve_path = -1;          // ladder rung that produced B, see tdvp_step
  Matrix B;                     // solved tangent coefficients (warm start)
};

// One Euler stage: solves G B = F via BiCGStab behind a ladder of fallbacks
// (preconditioned, plain, then Tikhonov-shifted; a stagnated iterate with
// relative residual < 0.9 along a descent direction is accepted on the spot,
// since near-singular metrics floor well above any tolerance), updates
// C <- C - dt dC(B) (imaginary mode) or C <- C - i dt dC(B) (real mode) and
// renormalises. `path_hint` (a previous report's solve_path) moves that rung
// to the front of the ladder; warm starts apply to the first rung only.
TdvpStepReport tdvp_step(UcpsState& state, const SpectralEnvironment& env,
                         const BlockHamiltonian& H, double dt,
                         EvolutionMode mode, const SolverOptions& solver = {},
                         const Matrix* warm_B = nullptr, int path_hint = -1);

struct GroundStateOptions {
  double dt = 0.05;
  double grad_tol = 1e-8;
  int max_steps = 50000;
  SolverOptions solver;
  // Checkpointing: every `checkpoint_every` accepted steps when a path is set.
  std::string checkpoint_path;
  int checkpoint_every = 1000;
  // Diagnostics hook, called after every step with (step, energy, grad_norm).
  std::function<void(int, double, double)> on_step;
};

struct GroundStateReport {
  double energy = 0.0;  // per-site
  double gradient_norm = 0.0;
  int steps = 0;
  bool converged = false;
};

// Imaginary-time Euler flow with monotonicity guard: dt halves whenever the
// energy rises (the step is re-taken), and relaxes back after a run of
// successes. Stops at grad_tol on |F| or at max_steps. Resumes bit-identically
// from a checkpoint written by a previous call with the same options.
GroundStateReport ground_state(UcpsState& state, const BlockHamiltonian& H,
                               const GroundStateOptions& opts);

struct EvolveOptions {
  double t_max = 1.0;
  double rel_tol = 1e-8;   // RKF45 embedded-pair tolerance
  double dt_init = 1e-3;
  double dt_min = 1e-10;
  double out_dt = 0.01;    // observer grid spacing
  int max_steps = 2000000;
  SolverOptions solver;
  std::string checkpoint_path;
  int checkpoint_every = 200;
};

// Called at every observer grid time with the current (renormalised) state.
using EvolveObserver = std::function<void(double t, const UcpsState&)>;

// Real-time evolution with the adaptive Fehlberg 4(5) pair. Steps land
// exactly on observer grid times; the state is renormalised after every
// accepted step. Throws ConvergenceFailure if dt underflows dt_min.
void evolve(UcpsState& state, const BlockHamiltonian& H,
            const EvolveOptions& opts, const EvolveObserver& observer);

}  // namespace ucps
