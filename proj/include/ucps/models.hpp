// Spin-1/2 chain Hamiltonians as lists of local terms, a global one-qubit
// basis rotation, and the embedding of a translation-invariant chain into
// blocks of n spins (intra-block matrices plus factorised boundary terms).
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ucps/linalg.hpp"

namespace ucps {

Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();
Matrix identity2();

enum class EvolutionMode { imaginary, real };

// One term of a translation-invariant nearest-neighbour Hamiltonian
// H = sum_i coefficient * op (site i)            [one_site]
//   + sum_i coefficient * op_a(i) op_b(i+1)      [two_site]
struct LocalTerm {
  enum class Kind { one_site, two_site };
  Kind kind;
  double coefficient;
  Matrix op_a;  // 2x2; the only operator for one_site terms
  Matrix op_b;  // 2x2; unused for one_site terms
};

enum class ModelKind { ising, xy, heisenberg };
ModelKind model_kind_from_string(const std::string& name);
std::string to_string(ModelKind kind);

struct ModelParams {
  double J = 1.0;
  double h = 0.0;
  double gamma = 1.0;  // XY anisotropy
};

// Sign conventions:
//   ising:      H = sum_i [ -J sz(i) sz(i+1) + h sx(i) ]
//   xy:         H = -sum_i [ (1+gamma)/2 sx sx + (1-gamma)/2 sy sy + h sz ]
//   heisenberg: H = J sum_i [ sx sx + sy sy + sz sz ]
std::vector<LocalTerm> build_model(ModelKind kind, const ModelParams& params);

// U = exp(-i theta sigma_y / 2), the rotation the basis scans use.
Matrix rotation_y(double theta);

// Conjugates a single-spin operator into the rotated frame: U^dag op U.
Matrix rotate_op(const Matrix& op, double theta);

// Applies rotate_op to every single-spin factor of every term. theta = 0 is
// the identity; the Hamiltonian spectrum is invariant under any theta.
std::vector<LocalTerm> rotate_basis(const std::vector<LocalTerm>& terms,
                                    double theta);

// Kronecker product, leftmost factor most significant.
Matrix kron(const Matrix& A, const Matrix& B);

// op (2x2) acting on spin `pos` (0-based) of an n-spin block, identity
// elsewhere; returns a 2^n x 2^n matrix.
Matrix block_one_site_op(const Matrix& op, int n, int pos);

// A chain Hamiltonian regrouped into blocks of n spins. `intra` collects the
// identity-padded terms living inside one block (fields on all n positions,
// couplings on the n-1 internal bonds); `boundary` keeps the block-crossing
// coupling factorised as (h1 acting on the last spin of a block, h2 acting on
// the first spin of the next), coefficient folded into h1. energy_shift is
// subtracted per block by the tangent-gradient kernels; drivers keep it at
// the current energy expectation so geometric tails stay summable.
struct BlockHamiltonian {
  int n = 1;
  int dim = 2;  // 2^n
  std::vector<Matrix> intra;
  std::vector<std::pair<Matrix, Matrix>> boundary;
  double energy_shift = 0.0;

  // sum(intra) - energy_shift * I, the combined one-block operator.
  Matrix intra_total() const;
  // sum(intra) without the shift (for expectation values).
  Matrix intra_total_unshifted() const;
};

// Regroups translation-invariant local terms into n-spin blocks. The per-block
// expectation of the result equals n times the per-site energy density by
// construction.
BlockHamiltonian block_embed(const std::vector<LocalTerm>& terms, int n);

}  // namespace ucps
