#pragma once

// Brute-force reference contractions on the doubled (ket x bra) space of
// dimension D^2. Everything here is assembled as explicit dense matrices from
// elementary definitions, with no shared code paths with the production
// kernels beyond the eigensolver, so agreement is a meaningful check.

#include <vector>

#include "ucps/models.hpp"
#include "ucps/state.hpp"

namespace ucps::dense {

// Site tensors A^p (D x D each, p = 0..D-1) of the correlator state viewed as
// a uniform MPS with the physical index copied onto the right virtual leg:
// A^p(a, b) = C(a, b) * delta(p, b).
std::vector<Matrix> copier_tensors(const UcpsState& state);

// Transfer matrix on the doubled space for independent ket/bra tensor
// families: T[(a, abar), (b, bbar)] = sum_p ket^p(a, b) * conj(bra^p(abar,
// bbar)). Flat index (a, abar) -> a * Dbra + abar.
Matrix transfer(const std::vector<Matrix>& ket, const std::vector<Matrix>& bra);

// Same with a one-block operator sandwiched between the layers:
// T_O = sum_{p q} O(p, q) ket^q (x) conj(bra^p).
Matrix op_transfer(const std::vector<Matrix>& ket,
                   const std::vector<Matrix>& bra, const Matrix& O);

struct FixedPoints {
  Complex lambda;  // dominant transfer eigenvalue
  Vector l, r;     // left/right dominant eigenvectors, l^T r = 1
};

FixedPoints fixed_points(const Matrix& T);

// (1 - T/lambda + |r)(l|)^{-1} (1 - |r)(l|): geometric tail of the transfer
// series with the dominant component projected out.
Matrix pseudo_inverse(const Matrix& T, const FixedPoints& fp);

// <O> for a one-block operator, and <h1 h2> for operators on adjacent blocks,
// both normalised by lambda and (l|r).
Complex expectation_one(const UcpsState& state, const Matrix& O);
Complex expectation_two(const UcpsState& state, const Matrix& h1,
                        const Matrix& h2);

// Gram matrix of the tangent map and its companion preconditioner kernel as
// explicit dense matrices over vec(B) (column-major, size (D-1)*D). Entries
// come from the quadruple sum over the spectral weights.
Matrix gram_matrix(const UcpsState& state, const SpectralEnvironment& env);
Matrix precond_matrix(const UcpsState& state, const SpectralEnvironment& env);

// Energy gradient d<H>/d conj(B) assembled placement by placement on the
// doubled space: for every term the bra-side hole runs over all relative
// positions (on the term, and strictly outside summed through the projected
// geometric series). Requires a normalised state. O(D^8); fine for D <= 6.
Matrix rhs_matrix(const UcpsState& state, const SpectralEnvironment& env,
                  const BlockHamiltonian& H);

// Overlap <Phi(Bp) | Phi(B)> of two tangent vectors computed from the dense
// transfer of the explicit dC tensors (same-site placement only; cross terms
// vanish by the left gauge condition, which is tested separately).
Complex tangent_overlap(const UcpsState& state, const SpectralEnvironment& env,
                        const Matrix& Bp, const Matrix& B);

// Centred finite-difference derivative of the energy density along the
// physical direction dC(B), for checking <H>-gradient consistency:
// d/d eps [ e(C + eps dC) ] at eps = 0.
double fd_energy_slope(const UcpsState& state, const BlockHamiltonian& H,
                       const Matrix& dC, double eps = 1e-5);

}  // namespace ucps::dense
