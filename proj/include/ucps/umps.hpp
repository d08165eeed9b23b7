// Uniform MPS baseline: matrix-free transfer-map environments, one-site TDVP
// with a null-space tangent parametrisation (trivial Gram), and the spectral
// observables used for cross-checks against the correlator-product code.
// Transfer maps are always applied as d rank-3 contractions at O(d D^3);
// the D^2 x D^2 transfer matrix is never materialised.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ucps/linalg.hpp"
#include "ucps/models.hpp"

namespace ucps {

struct UmpsState {
  int d = 2;  // physical dimension
  int D = 2;  // bond dimension
  std::vector<Matrix> A;  // A[p] is D x D

  UmpsState() = default;
  UmpsState(int d, int D, std::vector<Matrix> A);
};

UmpsState random_umps(int d, int D, std::uint64_t seed);

// Left action rho -> sum_p A^p^dag rho A^p and right action
// rho -> sum_p A^p rho A^p^dag of the transfer map.
Matrix umps_apply_left(const UmpsState& s, const Matrix& rho);
Matrix umps_apply_right(const UmpsState& s, const Matrix& rho);

// Hermitian PSD fixed points of the transfer map, normalised to
// tr(rho_l rho_r) = 1, found by power iteration on the matrix maps
// (warm-startable). lambda is the dominant transfer eigenvalue.
struct UmpsEnv {
  Matrix rho_l, rho_r;
  double lambda = 0.0;
  int iterations = 0;
};
UmpsEnv umps_environments(const UmpsState& state, double tol = 1e-12,
                          int max_iter = 100000,
                          const UmpsEnv* warm = nullptr);

// Rescales A so the dominant transfer eigenvalue is 1; returns the prior one.
double umps_normalize(UmpsState& state, const UmpsEnv* warm = nullptr);

// Energy density of a two-site Hamiltonian h ((d^2) x (d^2), row/column index
// p*d+q with p the left site).
double umps_energy(const UmpsState& state, const UmpsEnv& env, const Matrix& h);

// Second-largest transfer eigenvalue in magnitude (dominant pair deflated,
// a few seeded random restarts). Correlation length is -1/log|lambda2|.
Complex umps_second_eigenvalue(const UmpsState& state, const UmpsEnv& env,
                               double tol = 1e-10, int max_iter = 20000,
                               std::uint64_t seed = 1);

double umps_entropy(const UmpsState& state, const UmpsEnv& env);
RealVector umps_schmidt(const UmpsState& state, const UmpsEnv& env);

// <op> for a one-site operator (d x d).
Complex umps_expectation_one_site(const UmpsState& state, const UmpsEnv& env,
                                  const Matrix& op);

struct UmpsStepReport {
  double energy = 0.0;      // energy density before the step
  double grad_norm = 0.0;   // Frobenius norm of the tangent gradient
  int tail_iterations = 0;  // BiCGStab iterations for the geometric tail
};

// One Euler step of TDVP: projects (-H)|psi> (imaginary) or -iH|psi> (real)
// onto the tangent space in the left gauge, using the null-space
// parametrisation that makes the Gram matrix the identity, with the geometric
// tail solved by BiCGStab on (1 - E + |r)(l|). The state is renormalised
// afterwards. `env` is updated in place so the next step warm-starts.
UmpsStepReport umps_tdvp_step(UmpsState& state, UmpsEnv& env, const Matrix& h,
                              double dt, EvolutionMode mode,
                              double bicgstab_tol = 1e-10,
                              int bicgstab_max_iter = 500);

struct UmpsGroundOptions {
  double dt = 0.1;
  double grad_tol = 1e-8;
  int max_steps = 100000;
  double bicgstab_tol = 1e-10;
};

struct UmpsGroundReport {
  double energy = 0.0;
  double grad_norm = 0.0;
  int steps = 0;
  bool converged = false;
};

// Imaginary-time Euler flow to the variational ground state; dt halves when
// the energy rises and creeps back up after repeated successes.
UmpsGroundReport umps_ground_state(UmpsState& state, UmpsEnv& env,
                                   const Matrix& h,
                                   const UmpsGroundOptions& opts);

// Mixed transfer dominant eigenvalue between two uniform MPS (ket = a,
// bra = b), matrix-free; used for return amplitudes per fundamental site.
Complex umps_mixed_dominant(const UmpsState& a, const UmpsState& b,
                            double tol = 1e-12, int max_iter = 100000);

// Folds translation-invariant local terms into a single two-site matrix:
// two-site terms as written, one-site fields split evenly across the bond's
// two sites.
Matrix two_site_hamiltonian(const std::vector<LocalTerm>& terms);

}  // namespace ucps
