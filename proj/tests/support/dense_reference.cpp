#include "support/dense_reference.hpp"

#include <cmath>

#include "ucps/tdvp.hpp"

namespace ucps::dense {
namespace {

int flat(int a, int abar, int Dbar) { return a * Dbar + abar; }

// dC for a tangent coefficient matrix, straight from the definition:
// dC(i, j) = sum_{alpha beta} B(alpha, beta) vr^alpha(i) vl^beta(j) / conj(C).
Matrix raw_tangent(const UcpsState& state, const SpectralEnvironment& env,
                   const Matrix& B) {
  const int D = state.dim;
  Matrix dC = Matrix::Zero(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      Complex s = 0.0;
      for (int a = 0; a < D - 1; ++a)
        for (int b = 0; b < D; ++b)
          s += B(a, b) * env.sys.right(i, a + 1) * env.sys.left(j, b);
      dC(i, j) = s / std::conj(state.C(i, j));
    }
  return dC;
}

std::vector<Matrix> tangent_tensors(const Matrix& dC) {
  const int D = static_cast<int>(dC.rows());
  std::vector<Matrix> dA(D, Matrix::Zero(D, D));
  for (int p = 0; p < D; ++p) dA[p].col(p) = dC.col(p);
  return dA;
}

}  // namespace

std::vector<Matrix> copier_tensors(const UcpsState& state) {
  const int D = state.dim;
  std::vector<Matrix> A(D, Matrix::Zero(D, D));
  for (int p = 0; p < D; ++p) A[p].col(p) = state.C.col(p);
  return A;
}

Matrix transfer(const std::vector<Matrix>& ket,
                const std::vector<Matrix>& bra) {
  const int Dk = static_cast<int>(ket[0].rows());
  const int Db = static_cast<int>(bra[0].rows());
  Matrix T = Matrix::Zero(Dk * Db, Dk * Db);
  for (size_t p = 0; p < ket.size(); ++p)
    for (int a = 0; a < Dk; ++a)
      for (int ab = 0; ab < Db; ++ab)
        for (int b = 0; b < Dk; ++b)
          for (int bb = 0; bb < Db; ++bb)
            T(flat(a, ab, Db), flat(b, bb, Db)) +=
                ket[p](a, b) * std::conj(bra[p](ab, bb));
  return T;
}

Matrix op_transfer(const std::vector<Matrix>& ket,
                   const std::vector<Matrix>& bra, const Matrix& O) {
  const int Dk = static_cast<int>(ket[0].rows());
  const int Db = static_cast<int>(bra[0].rows());
  Matrix T = Matrix::Zero(Dk * Db, Dk * Db);
  for (int p = 0; p < static_cast<int>(bra.size()); ++p)
    for (int q = 0; q < static_cast<int>(ket.size()); ++q) {
      if (O(p, q) == Complex(0.0)) continue;
      for (int a = 0; a < Dk; ++a)
        for (int ab = 0; ab < Db; ++ab)
          for (int b = 0; b < Dk; ++b)
            for (int bb = 0; bb < Db; ++bb)
              T(flat(a, ab, Db), flat(b, bb, Db)) +=
                  O(p, q) * ket[q](a, b) * std::conj(bra[p](ab, bb));
    }
  return T;
}

FixedPoints fixed_points(const Matrix& T) {
  EigenSystem sys = full_eigendecomposition(T);
  return {sys.values(0), sys.left.col(0), sys.right.col(0)};
}

Matrix pseudo_inverse(const Matrix& T, const FixedPoints& fp) {
  const int N = static_cast<int>(T.rows());
  const Matrix rl = fp.r * fp.l.transpose();
  const Matrix P = Matrix::Identity(N, N) - rl;
  return (Matrix::Identity(N, N) - T / fp.lambda + rl)
      .partialPivLu()
      .solve(P);
}

Complex expectation_one(const UcpsState& state, const Matrix& O) {
  const auto A = copier_tensors(state);
  const Matrix T = transfer(A, A);
  const FixedPoints fp = fixed_points(T);
  const Matrix TO = op_transfer(A, A, O);
  return (fp.l.transpose() * TO * fp.r)(0) / fp.lambda;
}

Complex expectation_two(const UcpsState& state, const Matrix& h1,
                        const Matrix& h2) {
  const auto A = copier_tensors(state);
  const Matrix T = transfer(A, A);
  const FixedPoints fp = fixed_points(T);
  const Matrix T1 = op_transfer(A, A, h1);
  const Matrix T2 = op_transfer(A, A, h2);
  return (fp.l.transpose() * T1 * T2 * fp.r)(0) / (fp.lambda * fp.lambda);
}

Matrix gram_matrix(const UcpsState& state, const SpectralEnvironment& env) {
  const int D = state.dim;
  const int nb = (D - 1) * D;
  const Vector vl = env.vl();
  const Vector vr = env.vr();
  Matrix G = Matrix::Zero(nb, nb);
  for (int cg = 0; cg < D; ++cg)
    for (int rg = 0; rg < D - 1; ++rg)
      for (int ca = 0; ca < D; ++ca)
        for (int ra = 0; ra < D - 1; ++ra) {
          Complex s = 0.0;
          for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) {
              const Complex w = vl(i) * vr(j) / env.E(i, j);
              s += std::conj(env.sys.right(i, rg + 1) * env.sys.left(j, cg)) *
                   w * env.sys.right(i, ra + 1) * env.sys.left(j, ca);
            }
          G(cg * (D - 1) + rg, ca * (D - 1) + ra) = s;
        }
  return G;
}

Matrix precond_matrix(const UcpsState& state, const SpectralEnvironment& env) {
  const int D = state.dim;
  const int nb = (D - 1) * D;
  const Vector vl = env.vl();
  const Vector vr = env.vr();
  Matrix P = Matrix::Zero(nb, nb);
  for (int cg = 0; cg < D; ++cg)
    for (int rg = 0; rg < D - 1; ++rg)
      for (int ca = 0; ca < D; ++ca)
        for (int ra = 0; ra < D - 1; ++ra) {
          Complex s = 0.0;
          for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) {
              const Complex w = env.E(i, j) / (vl(i) * vr(j));
              s += env.sys.left(i, rg + 1) * env.sys.right(j, cg) * w *
                   std::conj(env.sys.left(i, ra + 1) * env.sys.right(j, ca));
            }
          P(cg * (D - 1) + rg, ca * (D - 1) + ra) = s;
        }
  return P;
}

Matrix rhs_matrix(const UcpsState& state, const SpectralEnvironment& env,
                  const BlockHamiltonian& H) {
  const int D = state.dim;
  if (std::abs(env.lambda1() - 1.0) > 1e-9)
    throw InvalidArgument("dense rhs_matrix requires a normalised state");

  const auto A = copier_tensors(state);
  const Matrix T = transfer(A, A);
  const FixedPoints fp = fixed_points(T);
  const Matrix PI = pseudo_inverse(T, fp);

  // Single-block operators, with the energy shift folded in as -shift * 1.
  std::vector<Matrix> ops(H.intra);
  ops.push_back(-H.energy_shift * Matrix::Identity(D, D));
  std::vector<Matrix> T_ops;
  for (const auto& O : ops) T_ops.push_back(op_transfer(A, A, O));
  std::vector<std::pair<Matrix, Matrix>> T_bnd;
  for (const auto& [h1, h2] : H.boundary)
    T_bnd.emplace_back(op_transfer(A, A, h1), op_transfer(A, A, h2));

  const Eigen::RowVectorXcd lT = fp.l.transpose();
  Matrix F = Matrix::Zero(D - 1, D);
  for (int cb = 0; cb < D; ++cb)
    for (int rb = 0; rb < D - 1; ++rb) {
      Matrix B = Matrix::Zero(D - 1, D);
      B(rb, cb) = 1.0;
      const Matrix dC = raw_tangent(state, env, B);
      const auto dA = tangent_tensors(dC);
      const Matrix HI = transfer(A, dA);  // bra-side hole, no operator
      Complex val = 0.0;
      for (size_t k = 0; k < ops.size(); ++k) {
        const Matrix HO = op_transfer(A, dA, ops[k]);
        val += (lT * HO * fp.r)(0);                 // hole on the operator
        val += (lT * T_ops[k] * PI * HI * fp.r)(0); // hole strictly right
        val += (lT * HI * PI * T_ops[k] * fp.r)(0); // hole strictly left
      }
      for (size_t k = 0; k < H.boundary.size(); ++k) {
        const auto& [h1, h2] = H.boundary[k];
        const auto& [T1, T2] = T_bnd[k];
        const Matrix H1 = op_transfer(A, dA, h1);
        const Matrix H2 = op_transfer(A, dA, h2);
        val += (lT * H1 * T2 * fp.r)(0);
        val += (lT * T1 * H2 * fp.r)(0);
        val += (lT * T1 * T2 * PI * HI * fp.r)(0);
        val += (lT * HI * PI * T1 * T2 * fp.r)(0);
      }
      F(rb, cb) = val;
    }
  return F;
}

Complex tangent_overlap(const UcpsState& state, const SpectralEnvironment& env,
                        const Matrix& Bp, const Matrix& B) {
  const auto A = copier_tensors(state);
  const Matrix T = transfer(A, A);
  const FixedPoints fp = fixed_points(T);
  const auto ket = tangent_tensors(raw_tangent(state, env, B));
  const auto bra = tangent_tensors(raw_tangent(state, env, Bp));
  const Matrix TB = transfer(ket, bra);
  return (fp.l.transpose() * TB * fp.r)(0);
}

double fd_energy_slope(const UcpsState& state, const BlockHamiltonian& H,
                       const Matrix& dC, double eps) {
  auto energy_at = [&](double e) {
    UcpsState s(state.n, state.C + e * dC);
    normalize(s);
    SpectralEnvironment env = environments(s);
    return block_energy(s, env, H);
  };
  return (energy_at(eps) - energy_at(-eps)) / (2.0 * eps);
}

}  // namespace ucps::dense
