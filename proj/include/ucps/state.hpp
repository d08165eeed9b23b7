// Uniform correlator product states on an infinite spin-1/2 chain: one DxD
// complex matrix C per state, D = 2^n with n the overlap length. The transfer
// matrix is the entrywise modulus square of C; its spectral data doubles as
// the left/right environments of the state.
#pragma once

#include <cstdint>
#include <vector>

#include "ucps/linalg.hpp"

namespace ucps {

struct UmpsState;  // defined in ucps/umps.hpp

struct UcpsState {
  int n = 1;        // spins per block / overlap length
  int s = 2;        // local dimension (spin-1/2)
  int dim = 2;      // D = s^n
  Matrix C;         // D x D

  UcpsState() = default;
  UcpsState(int n, Matrix C);
};

// Entries of C are independent complex Gaussians with magnitudes floored at
// 1e-12 of their median; the state is returned normalised.
UcpsState random_state(int n, std::uint64_t seed);

// E_ij = |C_ij|^2, real and entrywise nonnegative.
RealMatrix transfer_matrix(const UcpsState& state);

// Rescales C so the dominant transfer eigenvalue is 1 (power iteration).
// Returns the eigenvalue before rescaling. Throws on a zero spectral radius.
double normalize(UcpsState& state);

// Full spectral data of the transfer matrix. Eigenvalues are sorted by
// descending magnitude; left/right pairs are biorthonormal (unconjugated
// duality). The dominant pair follows the Perron convention: entrywise
// nonnegative after phase fixing, max entry of vr equal to 1, vl . vr = 1.
struct SpectralEnvironment {
  EigenSystem sys;
  RealMatrix E;

  int dim() const { return sys.size(); }
  Complex lambda(int a) const { return sys.values(a); }
  double lambda1() const { return sys.values(0).real(); }
  // Dominant left/right transfer eigenvectors (the environments).
  Vector vl() const { return sys.left.col(0); }
  Vector vr() const { return sys.right.col(0); }
};

// Requires a normalised state: throws InvalidArgument when the dominant
// transfer eigenvalue strays from 1 by more than 1e-8.
SpectralEnvironment environments(const UcpsState& state);

// Right environment in matrix form, C * diag(vr) * C^dag (Hermitian PSD).
Matrix right_env_matrix(const UcpsState& state, const SpectralEnvironment& env);

// <O> for a one-block operator O (D x D), evaluated at O(D^3) cost through
// pairwise row/column products; exact ratio of (l|E_O|r) to the same
// contraction without the operator, so mild denormalisation cancels.
Complex expectation_one_block(const UcpsState& state,
                              const SpectralEnvironment& env, const Matrix& O);

// <h1 h2> for operators on two adjacent blocks.
Complex expectation_two_block(const UcpsState& state,
                              const SpectralEnvironment& env, const Matrix& h1,
                              const Matrix& h2);

// Mixed transfer matrix M_ij = a.C_ij * conj(b.C_ij); dominant eigenvalue
// feeds the return-amplitude rate function.
Matrix mixed_transfer(const UcpsState& a, const UcpsState& b);

// Schmidt coefficients across a block boundary: descending singular values of
// rho_l^{1/2} rho_r^{1/2}, rescaled so the squares sum to one.
RealVector schmidt_coefficients(const UcpsState& state,
                                const SpectralEnvironment& env);

enum class CopierSide { right, left };

// Maps the state to a uniform MPS with physical dimension D by attaching a
// copier tensor: A^p_ab = C_ab delta_pb (right) or delta_pa C_ab (left).
UmpsState to_umps(const UcpsState& state, CopierSide side = CopierSide::right);

}  // namespace ucps
