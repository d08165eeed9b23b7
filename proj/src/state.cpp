#include "ucps/state.hpp"

#include <cmath>

#include "ucps/umps.hpp"

namespace ucps {
namespace {

// Checks the Perron property of a phase-fixed dominant eigenvector: real up
// to tolerance and entrywise nonnegative up to tolerance.
void check_perron(const Vector& v, const char* what) {
  const double scale = std::max(v.cwiseAbs().maxCoeff(), 1e-300);
  if (v.imag().cwiseAbs().maxCoeff() > 1e-8 * scale ||
      v.real().minCoeff() < -1e-8 * scale)
    throw Error(std::string(what) +
                ": dominant transfer eigenvector is not entrywise nonnegative; "
                "the dominant eigenvalue may be degenerate or complex");
}

}  // namespace

UcpsState::UcpsState(int n_, Matrix C_) : n(n_), C(std::move(C_)) {
  if (n < 1) throw InvalidArgument("UcpsState: n must be >= 1");
  dim = 1 << n;
  if (C.rows() != dim || C.cols() != dim)
    throw InvalidArgument("UcpsState: C must be 2^n x 2^n");
  ensure_finite(C, "UcpsState C");
}

UcpsState random_state(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("random_state: n must be >= 1");
  const int D = 1 << n;
  Rng rng(seed);
  Matrix C(D, D);
  for (int j = 0; j < D; ++j)
    for (int i = 0; i < D; ++i) C(i, j) = rng.complex_gaussian();
  const double floor_abs = magnitude_floor(C, 1e-12);
  for (Eigen::Index k = 0; k < C.size(); ++k) {
    const double a = std::abs(C(k));
    if (a < floor_abs)
      C(k) = (a == 0.0) ? Complex(floor_abs, 0.0) : C(k) * (floor_abs / a);
  }
  UcpsState state(n, std::move(C));
  normalize(state);
  return state;
}

RealMatrix transfer_matrix(const UcpsState& state) {
  return state.C.cwiseAbs2();
}

double normalize(UcpsState& state) {
  const RealMatrix E = transfer_matrix(state);
  const EigenPair top = dominant_eigenpair(E.cast<Complex>(), 1e-14, 200000);
  const double lambda = top.value.real();
  if (!(lambda > 1e-300) || std::abs(top.value.imag()) > 1e-10 * lambda)
    throw InvalidArgument(
        "normalize: transfer matrix has no positive dominant eigenvalue");
  state.C /= std::sqrt(lambda);
  return lambda;
}

SpectralEnvironment environments(const UcpsState& state) {
  SpectralEnvironment env;
  env.E = transfer_matrix(state);
  env.sys = full_eigendecomposition(env.E.cast<Complex>());
  // Perron convention for the dominant pair: vr max entry exactly 1; the
  // rescaling keeps left^T right = I, so vl . vr = 1 stays automatic.
  int imax = 0;
  env.sys.right.col(0).cwiseAbs().maxCoeff(&imax);
  const Complex pivot = env.sys.right.col(0)(imax);
  if (std::abs(pivot) == 0.0)
    throw Error("environments: dominant right eigenvector vanishes");
  env.sys.right.col(0) /= pivot;
  env.sys.left.col(0) *= pivot;
  check_perron(env.sys.right.col(0), "environments (right)");
  check_perron(env.sys.left.col(0), "environments (left)");
  if (std::abs(env.sys.values(0).imag()) >
      1e-10 * std::abs(env.sys.values(0)))
    throw Error("environments: dominant transfer eigenvalue is complex");
  if (std::abs(env.sys.values(0) - 1.0) > 1e-8)
    throw InvalidArgument(
        "environments: state is not normalised (lambda1 != 1)");
  return env;
}

Matrix right_env_matrix(const UcpsState& state,
                        const SpectralEnvironment& env) {
  return state.C * env.vr().asDiagonal() * state.C.adjoint();
}

namespace {

// (l| E_O |rmat) with l = diag(vl): sum_ab (C^T diag(vl) conj(C))_{ab} *
// O_{ba} * rmat_{ab}. O(D^3) through the two sandwich products.
Complex contract_one(const UcpsState& state, const Vector& vl,
                     const Matrix& O, const Matrix& rmat) {
  const Matrix X = state.C.transpose() * vl.asDiagonal() * state.C.conjugate();
  return ((X.cwiseProduct(rmat)) * O).trace();
}

}  // namespace

Complex expectation_one_block(const UcpsState& state,
                              const SpectralEnvironment& env,
                              const Matrix& O) {
  if (O.rows() != state.dim || O.cols() != state.dim)
    throw InvalidArgument("expectation_one_block: operator dimension mismatch");
  const Matrix rmat = right_env_matrix(state, env);
  const Complex lr = (env.vl().array() * rmat.diagonal().array()).sum();
  const Complex num = contract_one(state, env.vl(), O, rmat);
  return num / (env.lambda1() * lr);
}

Complex expectation_two_block(const UcpsState& state,
                              const SpectralEnvironment& env, const Matrix& h1,
                              const Matrix& h2) {
  const int D = state.dim;
  if (h1.rows() != D || h1.cols() != D || h2.rows() != D || h2.cols() != D)
    throw InvalidArgument("expectation_two_block: operator dimension mismatch");
  const Matrix rmat = right_env_matrix(state, env);
  const Complex lr = (env.vl().array() * rmat.diagonal().array()).sum();
  // Absorb h2 and one transfer application into the right message, then close
  // with the one-block contraction of h1.
  const Matrix r1 =
      state.C * rmat.cwiseProduct(h2.transpose()) * state.C.adjoint();
  const Complex num = contract_one(state, env.vl(), h1, r1);
  const double l1 = env.lambda1();
  return num / (l1 * l1 * lr);
}

Matrix mixed_transfer(const UcpsState& a, const UcpsState& b) {
  if (a.dim != b.dim)
    throw InvalidArgument("mixed_transfer: dimension mismatch");
  return a.C.cwiseProduct(b.C.conjugate());
}

RealVector schmidt_coefficients(const UcpsState& state,
                                const SpectralEnvironment& env) {
  // rho_l = diag(vl) is nonnegative by the Perron convention.
  RealVector vl_real = env.vl().real().cwiseMax(0.0);
  Matrix sqrt_l = vl_real.cwiseSqrt().cast<Complex>().asDiagonal();
  Matrix sqrt_r = psd_sqrt(right_env_matrix(state, env));
  RealVector sv = singular_values(sqrt_l * sqrt_r);
  const double total = sv.squaredNorm();
  if (!(total > 0.0))
    throw Error("schmidt_coefficients: zero Schmidt spectrum");
  sv /= std::sqrt(total);
  return sv;
}

UmpsState to_umps(const UcpsState& state, CopierSide side) {
  const int D = state.dim;
  std::vector<Matrix> A(D, Matrix::Zero(D, D));
  for (int p = 0; p < D; ++p) {
    if (side == CopierSide::right)
      A[p].col(p) = state.C.col(p);  // A^p_ab = C_ab delta_pb
    else
      A[p].row(p) = state.C.row(p);  // A^p_ab = delta_pa C_ab
  }
  return UmpsState(D, D, std::move(A));
}

}  // namespace ucps
