#include "ucps/state.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "support/dense_reference.hpp"
#include "ucps/models.hpp"
#include "ucps/serialize.hpp"
#include "ucps/umps.hpp"

using namespace ucps;

namespace {

// n = 1 product state with single-spin amplitudes (a, b): C = f g^T with
// f(i) g(i) = amplitude, normalised by the transfer spectrum.
UcpsState product_state(Complex a, Complex b) {
  Matrix C(2, 2);
  C << a, a, b, b;
  UcpsState s(1, C);
  normalize(s);
  return s;
}

UcpsState up_state() {
  Matrix C = Matrix::Zero(2, 2);
  C(0, 0) = 1.0;
  return UcpsState(1, C);
}

Matrix random_herm(int dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = rng.complex_gaussian();
  return Matrix(0.5 * (m + m.adjoint()));
}

}  // namespace

TEST_CASE("random_state: determinism, floor, normalisation") {
  const UcpsState a = random_state(2, 42);
  const UcpsState b = random_state(2, 42);
  CHECK(a.C == b.C);
  const UcpsState c = random_state(2, 43);
  CHECK(a.C != c.C);

  // Entry magnitudes respect the 1e-12-of-median floor.
  RealVector mags = a.C.cwiseAbs().reshaped();
  std::sort(mags.begin(), mags.end());
  const double median = mags((mags.size() - 1) / 2);
  CHECK(mags(0) >= 1e-12 * median * (1.0 - 1e-9));

  // Already normalised on return.
  UcpsState copy = a;
  const double lambda = normalize(copy);
  CHECK(std::abs(lambda - 1.0) < 1e-12);
}

TEST_CASE("transfer_matrix is the entrywise modulus square") {
  Matrix C = Matrix::Zero(2, 2);
  C(0, 0) = 1.0;
  CHECK((transfer_matrix(UcpsState(1, C)) - RealMatrix(C.cwiseAbs2()))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  const Matrix ones = Matrix::Ones(2, 2) / std::sqrt(2.0);
  const RealMatrix E = transfer_matrix(UcpsState(1, ones));
  CHECK((E - 0.5 * RealMatrix::Ones(2, 2)).cwiseAbs().maxCoeff() < 1e-15);

  const UcpsState r = random_state(2, 7);
  CHECK((transfer_matrix(r) - RealMatrix(r.C.cwiseAbs2()))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("mapped uMPS transfer has exactly D nonzero eigenvalues = eig(E)") {
  const UcpsState s = random_state(2, 11);  // D = 4
  const auto A = dense::copier_tensors(s);
  const Matrix T = dense::transfer(A, A);  // 16 x 16
  Eigen::ComplexEigenSolver<Matrix> es(T, false);
  std::vector<Complex> big(es.eigenvalues().begin(), es.eigenvalues().end());
  const auto desc = [](Complex a, Complex b) {
    if (std::abs(std::abs(a) - std::abs(b)) > 1e-12)
      return std::abs(a) > std::abs(b);
    if (std::abs(a.real() - b.real()) > 1e-12) return a.real() > b.real();
    return a.imag() > b.imag();
  };
  std::sort(big.begin(), big.end(), desc);
  const EigenSystem small =
      full_eigendecomposition(transfer_matrix(s).cast<Complex>());
  const int D = s.dim;
  for (int a = 0; a < D; ++a)
    CHECK(std::abs(big[a] - small.values(a)) < 1e-10);
  for (int a = D; a < D * D; ++a) CHECK(std::abs(big[a]) < 1e-10);
}

TEST_CASE("normalize: idempotence, scale recovery, degenerate error") {
  UcpsState s = random_state(3, 5);
  const Matrix before = s.C;
  const double lambda = normalize(s);
  CHECK(std::abs(lambda - 1.0) < 1e-12);
  CHECK((s.C - before).cwiseAbs().maxCoeff() < 1e-13);

  UcpsState scaled = s;
  scaled.C *= 3.0;
  const double nine = normalize(scaled);
  CHECK(std::abs(nine - 9.0) < 1e-10);
  CHECK((scaled.C - s.C).cwiseAbs().maxCoeff() < 1e-12);

  UcpsState zero(1, Matrix::Zero(2, 2));
  CHECK_THROWS_AS(normalize(zero), InvalidArgument);
}

TEST_CASE("environments: hadamard product state") {
  Matrix had(2, 2);
  had << 1, 1, 1, -1;
  UcpsState s(1, Matrix(had / std::sqrt(2.0)));
  const SpectralEnvironment env = environments(s);
  CHECK(std::abs(env.lambda1() - 1.0) < 1e-12);
  // Convention: vr max entry 1, vl . vr = 1.
  CHECK(std::abs(env.vr()(0) - 1.0) < 1e-12);
  CHECK(std::abs(env.vr()(1) - 1.0) < 1e-12);
  CHECK(std::abs(env.vl()(0) - 0.5) < 1e-12);
  CHECK(std::abs(env.vl()(1) - 0.5) < 1e-12);
}

TEST_CASE("environments: diagonal state") {
  Matrix C = Matrix::Zero(2, 2);
  C(0, 0) = 1.0;
  C(1, 1) = Complex(0.48, 0.36);  // |a| = 0.6
  const UcpsState s(1, C);
  const SpectralEnvironment env = environments(s);
  CHECK(std::abs(env.lambda(0) - 1.0) < 1e-14);
  CHECK(std::abs(env.lambda(1) - 0.36) < 1e-14);
  CHECK(std::abs(env.vr()(0) - 1.0) < 1e-14);
  CHECK(std::abs(env.vr()(1)) < 1e-14);
  CHECK(std::abs(env.vl()(0) - 1.0) < 1e-14);
  CHECK(std::abs(env.vl()(1)) < 1e-14);
}

TEST_CASE("environments: reconstruction, Perron signs, normalisation guard") {
  const UcpsState s = random_state(3, 17);
  const SpectralEnvironment env = environments(s);
  CHECK(env.sys.reconstruction_error(env.E.cast<Complex>()) < 1e-9);
  CHECK(env.vl().real().minCoeff() > -1e-10);
  CHECK(env.vr().real().minCoeff() > -1e-10);
  CHECK(env.vl().imag().cwiseAbs().maxCoeff() < 1e-10);
  CHECK(env.vr().imag().cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs(env.vl().dot(env.vr()) - 1.0) < 1e-10);

  UcpsState off = s;
  off.C *= 1.001;  // lambda1 = 1.002 now
  CHECK_THROWS_AS(environments(off), InvalidArgument);
}

TEST_CASE("expectation_one_block: identity and product states") {
  const UcpsState r = random_state(2, 23);
  const SpectralEnvironment env = environments(r);
  CHECK(std::abs(expectation_one_block(r, env, Matrix::Identity(4, 4)) -
                 Complex(1.0)) < 1e-12);

  const UcpsState right = product_state(1.0, 1.0);  // |+x> everywhere
  const SpectralEnvironment env_r = environments(right);
  CHECK(std::abs(expectation_one_block(right, env_r, pauli_x()) -
                 Complex(1.0)) < 1e-12);
  CHECK(std::abs(expectation_one_block(right, env_r, pauli_z())) < 1e-12);

  const UcpsState up = up_state();
  const SpectralEnvironment env_u = environments(up);
  CHECK(std::abs(expectation_one_block(up, env_u, pauli_z()) - Complex(1.0)) <
        1e-12);
}

TEST_CASE("expectation_two_block: identity and product checks") {
  const UcpsState r = random_state(2, 29);
  const SpectralEnvironment env = environments(r);
  const Matrix id = Matrix::Identity(4, 4);
  CHECK(std::abs(expectation_two_block(r, env, id, id) - Complex(1.0)) <
        1e-12);

  const UcpsState up = up_state();
  const SpectralEnvironment env_u = environments(up);
  CHECK(std::abs(expectation_two_block(up, env_u, pauli_z(), pauli_z()) -
                 Complex(1.0)) < 1e-12);
}

TEST_CASE("expectations agree with the dense doubled-space oracle") {
  for (int n : {1, 2, 3}) {
    const UcpsState s = random_state(n, 100 + n);
    const SpectralEnvironment env = environments(s);
    const Matrix O = random_herm(s.dim, 200 + n);
    const Complex fast = expectation_one_block(s, env, O);
    const Complex slow = dense::expectation_one(s, O);
    CHECK(std::abs(fast - slow) < 1e-10);

    const Matrix h1 = random_herm(s.dim, 300 + n);
    const Matrix h2 = random_herm(s.dim, 400 + n);
    const Complex fast2 = expectation_two_block(s, env, h1, h2);
    const Complex slow2 = dense::expectation_two(s, h1, h2);
    CHECK(std::abs(fast2 - slow2) < 1e-10);
  }
}

TEST_CASE("mixed_transfer: self, orthogonal, and contraction bound") {
  const UcpsState a = random_state(2, 31);
  const Matrix self = mixed_transfer(a, a);
  const EigenPair top = dominant_eigenpair(self);
  CHECK(std::abs(std::abs(top.value) - 1.0) < 1e-12);

  Matrix down = Matrix::Zero(2, 2);
  down(1, 1) = 1.0;
  CHECK(mixed_transfer(up_state(), UcpsState(1, down))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  const UcpsState b = random_state(2, 37);
  const EigenPair mixed = dominant_eigenpair(mixed_transfer(a, b));
  CHECK(std::abs(mixed.value) <= 1.0 + 1e-12);

  CHECK_THROWS_AS(mixed_transfer(a, up_state()), InvalidArgument);
}

TEST_CASE("schmidt_coefficients: product, hadamard, normalisation") {
  const RealVector single = schmidt_coefficients(up_state(),
                                                 environments(up_state()));
  CHECK(std::abs(single(0) - 1.0) < 1e-12);
  for (int i = 1; i < single.size(); ++i) CHECK(std::abs(single(i)) < 1e-12);

  Matrix had(2, 2);
  had << 1, 1, 1, -1;
  UcpsState h(1, Matrix(had / std::sqrt(2.0)));
  const RealVector pair = schmidt_coefficients(h, environments(h));
  CHECK(std::abs(pair(0) - 1.0 / std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(pair(1) - 1.0 / std::sqrt(2.0)) < 1e-12);

  const UcpsState r = random_state(3, 41);
  const RealVector lam = schmidt_coefficients(r, environments(r));
  CHECK(std::abs(lam.squaredNorm() - 1.0) < 1e-12);
  for (int i = 0; i + 1 < lam.size(); ++i) CHECK(lam(i) >= lam(i + 1) - 1e-15);
}

TEST_CASE("to_umps: copier tensor structure") {
  const UcpsState s = random_state(1, 47);
  const UmpsState right = to_umps(s, CopierSide::right);
  CHECK(right.d == 2);
  CHECK(right.D == 2);
  for (int p = 0; p < 2; ++p)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const Complex want_r = (p == b) ? s.C(a, b) : Complex(0.0);
        CHECK(std::abs(right.A[p](a, b) - want_r) < 1e-15);
      }
  const UmpsState left = to_umps(s, CopierSide::left);
  for (int p = 0; p < 2; ++p)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const Complex want_l = (p == a) ? s.C(a, b) : Complex(0.0);
        CHECK(std::abs(left.A[p](a, b) - want_l) < 1e-15);
      }
}

TEST_CASE("to_umps: environments match the spectral data") {
  const UcpsState s = random_state(2, 53);
  const SpectralEnvironment env = environments(s);
  const UmpsState mapped = to_umps(s);
  const UmpsEnv uenv = umps_environments(mapped);

  // rho_l is diagonal with diagonal proportional to vl; rho_r proportional to
  // C diag(vr) C^dag; the product of the two scales is fixed by
  // tr(rho_l rho_r) = 1 = vl . vr.
  const Matrix rho_l_ref = Matrix(env.vl().asDiagonal());
  const Matrix rho_r_ref = right_env_matrix(s, env);
  const double scale = uenv.rho_l.trace().real() / env.vl().sum().real();
  CHECK(scale > 0.0);
  CHECK((uenv.rho_l - scale * rho_l_ref).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((uenv.rho_r - rho_r_ref / scale).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("state serialisation round trips exactly") {
  const UcpsState s = random_state(2, 59);
  const UcpsState back = state_from_text(state_to_text(s));
  CHECK(back.n == s.n);
  CHECK(back.s == s.s);
  CHECK(back.dim == s.dim);
  CHECK(back.C == s.C);  // hex formatting: bit-exact

  const std::string path =
      (std::filesystem::temp_directory_path() / "ucps_state_rt.txt").string();
  save_state(path, s);
  const UcpsState loaded = load_state(path);
  CHECK(loaded.C == s.C);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint serialisation round trips exactly") {
  TdvpCheckpoint ck;
  ck.state = random_state(2, 61);
  ck.step = 1234;
  ck.dt = 0.017283461;
  ck.success_run = 9;
  ck.time = 3.50001e-3;
  Rng rng(77);
  rng.gaussian();
  ck.rng = rng.serialize();
  ck.warm_B = Matrix::Random(3, 4);

  const std::string path =
      (std::filesystem::temp_directory_path() / "ucps_ck_rt.txt").string();
  save_checkpoint(path, ck);
  const TdvpCheckpoint back = load_checkpoint(path);
  CHECK(back.state.C == ck.state.C);
  CHECK(back.step == ck.step);
  CHECK(back.dt == ck.dt);
  CHECK(back.success_run == ck.success_run);
  CHECK(back.time == ck.time);
  CHECK(back.rng == ck.rng);
  CHECK(back.warm_B == ck.warm_B);
  std::remove(path.c_str());
}
