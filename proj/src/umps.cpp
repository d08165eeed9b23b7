#include "ucps/umps.hpp"

#include <cmath>

namespace ucps {
namespace {

Vector vec(const Matrix& M) {
  return Eigen::Map<const Vector>(M.data(), M.size());
}

Matrix unvec(const Vector& v, int D) {
  return Eigen::Map<const Matrix>(v.data(), D, D);
}

Matrix hermitize(const Matrix& M) { return 0.5 * (M + M.adjoint()); }

// Hermitian f(M) with eigenvalues mapped through sqrt / 1/sqrt. Negative
// eigenvalues within roundoff of zero are clamped; the inverse root floors
// the spectrum at 1e-14 of the largest eigenvalue to avoid blowup.
void hermitian_roots(const Matrix& M, Matrix& root, Matrix& inv_root) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(M));
  if (es.info() != Eigen::Success)
    throw Error("hermitian_roots: eigensolver failed");
  const RealVector ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() < -1e-10 * std::max(top, 1e-300))
    throw NotPositiveSemidefinite("transfer fixed point is not PSD");
  RealVector rt(ev.size()), irt(ev.size());
  for (int i = 0; i < ev.size(); ++i) {
    const double x = std::max(ev(i), 0.0);
    rt(i) = std::sqrt(x);
    irt(i) = 1.0 / std::sqrt(std::max(x, 1e-14 * top));
  }
  root = es.eigenvectors() * rt.asDiagonal() * es.eigenvectors().adjoint();
  inv_root = es.eigenvectors() * irt.asDiagonal() * es.eigenvectors().adjoint();
}

double real_positive(Complex z, const char* what) {
  if (std::abs(z.imag()) > 1e-8 * std::max(std::abs(z), 1e-300) ||
      z.real() <= 0.0)
    throw Error(std::string(what) + " is not real positive");
  return z.real();
}

}  // namespace

UmpsState::UmpsState(int d_, int D_, std::vector<Matrix> A_)
    : d(d_), D(D_), A(std::move(A_)) {
  if (d < 1 || D < 1) throw InvalidArgument("UmpsState: d, D must be >= 1");
  if (static_cast<int>(A.size()) != d)
    throw InvalidArgument("UmpsState: need d site matrices");
  for (const auto& M : A) {
    if (M.rows() != D || M.cols() != D)
      throw InvalidArgument("UmpsState: site matrices must be D x D");
    ensure_finite(M, "UmpsState A");
  }
}

UmpsState random_umps(int d, int D, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Matrix> A(d, Matrix(D, D));
  for (auto& M : A)
    for (int j = 0; j < D; ++j)
      for (int i = 0; i < D; ++i) M(i, j) = rng.complex_gaussian();
  UmpsState s(d, D, std::move(A));
  umps_normalize(s);
  return s;
}

Matrix umps_apply_left(const UmpsState& s, const Matrix& rho) {
  Matrix out = Matrix::Zero(s.D, s.D);
  for (const auto& M : s.A) out += M.adjoint() * rho * M;
  return out;
}

Matrix umps_apply_right(const UmpsState& s, const Matrix& rho) {
  Matrix out = Matrix::Zero(s.D, s.D);
  for (const auto& M : s.A) out += M * rho * M.adjoint();
  return out;
}

UmpsEnv umps_environments(const UmpsState& state, double tol, int max_iter,
                          const UmpsEnv* warm) {
  const int D = state.D;
  const LinOp right_op = [&](const Vector& v) {
    return vec(umps_apply_right(state, unvec(v, D)));
  };
  const LinOp left_op = [&](const Vector& v) {
    return vec(umps_apply_left(state, unvec(v, D)));
  };
  const Vector start_r =
      warm ? vec(warm->rho_r) : vec(Matrix(Matrix::Identity(D, D)));
  const Vector start_l =
      warm ? vec(warm->rho_l) : vec(Matrix(Matrix::Identity(D, D)));

  PowerResult pr = power_dominant(right_op, D * D, tol, max_iter, start_r);
  PowerResult pl = power_dominant(left_op, D * D, tol, max_iter, start_l);
  const double lam_r = real_positive(pr.value, "dominant transfer eigenvalue");
  const double lam_l = real_positive(pl.value, "dominant transfer eigenvalue");
  if (std::abs(lam_r - lam_l) > 1e-8 * std::max(lam_r, lam_l))
    throw Error("umps_environments: left/right eigenvalues disagree");

  UmpsEnv env;
  env.rho_r = hermitize(unvec(pr.vec, D));
  env.rho_l = hermitize(unvec(pl.vec, D));
  if (env.rho_r.trace().real() < 0) env.rho_r = -env.rho_r;
  if (env.rho_l.trace().real() < 0) env.rho_l = -env.rho_l;
  env.rho_r /= env.rho_r.trace().real();
  const double pairing =
      real_positive((env.rho_l * env.rho_r).trace(), "tr(rho_l rho_r)");
  env.rho_l /= pairing;
  env.lambda = 0.5 * (lam_r + lam_l);
  env.iterations = pr.iterations + pl.iterations;
  return env;
}

double umps_normalize(UmpsState& state, const UmpsEnv* warm) {
  const UmpsEnv env = umps_environments(state, 1e-12, 100000, warm);
  const double s = std::sqrt(env.lambda);
  for (auto& M : state.A) M /= s;
  return env.lambda;
}

double umps_energy(const UmpsState& state, const UmpsEnv& env,
                   const Matrix& h) {
  const int d = state.d;
  if (h.rows() != d * d || h.cols() != d * d)
    throw InvalidArgument("umps_energy: h must be d^2 x d^2");
  Complex e = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Matrix bra = state.A[i] * state.A[j];  // W_{ij}
      for (int ip = 0; ip < d; ++ip)
        for (int jp = 0; jp < d; ++jp) {
          const Complex c = h(i * d + j, ip * d + jp);
          if (c == Complex(0.0)) continue;
          e += c * (env.rho_l * state.A[ip] * state.A[jp] * env.rho_r *
                    bra.adjoint())
                       .trace();
        }
    }
  const double scale = env.lambda * env.lambda;
  if (std::abs(e.imag()) > 1e-8 * std::max(1.0, std::abs(e)))
    throw Error("umps_energy: expectation has a large imaginary part");
  return e.real() / scale;
}

Complex umps_second_eigenvalue(const UmpsState& state, const UmpsEnv& env,
                               double tol, int max_iter, std::uint64_t seed) {
  const int D = state.D;
  const LinOp right_op = [&](const Vector& v) {
    return vec(umps_apply_right(state, unvec(v, D)));
  };
  // Deflate the dominant pair; the invariant pairing of matrices is
  // tr(rho_l rho) = vec(rho_l^T)^T vec(rho), already normalised to 1.
  std::vector<std::tuple<Complex, Vector, Vector>> deflations;
  deflations.emplace_back(Complex(env.lambda),
                          vec(Matrix(env.rho_l.transpose())), vec(env.rho_r));
  PowerResult pr =
      deflated_power_dominant(right_op, D * D, deflations, tol, max_iter, seed);
  return pr.value;
}

RealVector umps_schmidt(const UmpsState& state, const UmpsEnv& env) {
  (void)state;
  Matrix rl, rr, il, ir;
  hermitian_roots(env.rho_l, rl, il);
  hermitian_roots(env.rho_r, rr, ir);
  RealVector sv = singular_values(rl * rr);
  const double total = sv.squaredNorm();
  if (total <= 0) throw Error("umps_schmidt: zero Schmidt spectrum");
  return sv / std::sqrt(total);
}

double umps_entropy(const UmpsState& state, const UmpsEnv& env) {
  const RealVector sv = umps_schmidt(state, env);
  double s = 0.0;
  for (int i = 0; i < sv.size(); ++i) {
    const double p = sv(i) * sv(i);
    if (p > 0) s -= p * std::log(p);
  }
  return s;
}

Complex umps_expectation_one_site(const UmpsState& state, const UmpsEnv& env,
                                  const Matrix& op) {
  const int d = state.d;
  if (op.rows() != d || op.cols() != d)
    throw InvalidArgument("umps_expectation_one_site: op must be d x d");
  Complex val = 0.0;
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) {
      if (op(p, q) == Complex(0.0)) continue;
      val += op(p, q) *
             (env.rho_l * state.A[q] * env.rho_r * state.A[p].adjoint())
                 .trace();
    }
  return val / env.lambda;
}

UmpsStepReport umps_tdvp_step(UmpsState& state, UmpsEnv& env, const Matrix& h,
                              double dt, EvolutionMode mode,
                              double bicgstab_tol, int bicgstab_max_iter) {
  const int d = state.d, D = state.D;
  if (std::abs(env.lambda - 1.0) > 1e-6)
    throw InvalidArgument("umps_tdvp_step requires a normalised state");
  if (h.rows() != d * d || h.cols() != d * d)
    throw InvalidArgument("umps_tdvp_step: h must be d^2 x d^2");

  Matrix rl_half, rl_ihalf, rr_half, rr_ihalf;
  hermitian_roots(env.rho_l, rl_half, rl_ihalf);
  hermitian_roots(env.rho_r, rr_half, rr_ihalf);

  // Null-space basis of the left-gauge constraint: columns of U orthogonal to
  // the range of the stacked rho_l^{1/2} A^i.
  Matrix L(d * D, D);
  for (int i = 0; i < d; ++i) L.middleRows(i * D, D) = rl_half * state.A[i];
  Eigen::BDCSVD<Matrix> svd(L, Eigen::ComputeFullU);
  if (svd.singularValues()(D - 1) < 1e-12 * svd.singularValues()(0))
    throw Error("umps_tdvp_step: gauge stack is numerically rank deficient");
  const Matrix Vperp = svd.matrixU().rightCols((d - 1) * D);

  // Hole derivatives of the energy density, hole index i in the bra layer.
  std::vector<Matrix> W(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) W[i * d + j] = state.A[i] * state.A[j];

  std::vector<Matrix> G(d, Matrix::Zero(D, D));
  Matrix l_h = Matrix::Zero(D, D);
  for (int ip = 0; ip < d; ++ip)
    for (int jp = 0; jp < d; ++jp) {
      const Matrix ket = env.rho_l * W[ip * d + jp];       // rho_l A^i' A^j'
      const Matrix ket_r = ket * env.rho_r;                // ... rho_r
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const Complex c = h(i * d + j, ip * d + jp);
          if (c == Complex(0.0)) continue;
          G[i] += c * ket_r * state.A[j].adjoint();
          G[j] += c * state.A[i].adjoint() * ket_r;
          l_h += c * W[i * d + j].adjoint() * ket;
        }
    }
  const Complex e_c = (l_h * env.rho_r).trace();
  if (std::abs(e_c.imag()) > 1e-8 * std::max(1.0, std::abs(e_c)))
    throw Error("umps_tdvp_step: energy has a large imaginary part");
  const double e = e_c.real();

  // Geometric tail: left message K from all terms strictly left of the hole,
  // dominant component projected out.
  const LinOp tail_op = [&](const Vector& v) {
    const Matrix K = unvec(v, D);
    Matrix out = K - umps_apply_left(state, K);
    out += (K * env.rho_r).trace() * env.rho_l;
    return vec(out);
  };
  const LinOp ident = [](const Vector& v) { return v; };
  const Matrix rhs = l_h - e * env.rho_l;
  BicgstabReport tail_report;
  const Vector kvec = bicgstab(tail_op, ident, vec(rhs), bicgstab_tol,
                               bicgstab_max_iter, nullptr, &tail_report);
  const Matrix K = unvec(kvec, D);
  for (int i = 0; i < d; ++i) G[i] += K * state.A[i] * env.rho_r;

  // Project onto the tangent parametrisation (Gram is the identity there).
  Matrix FX = Matrix::Zero((d - 1) * D, D);
  for (int i = 0; i < d; ++i)
    FX += Vperp.middleRows(i * D, D).adjoint() *
          (rl_ihalf * G[i] * rr_ihalf);

  UmpsStepReport report;
  report.energy = e;
  report.grad_norm = FX.norm();
  report.tail_iterations = tail_report.iterations;

  const Complex factor = (mode == EvolutionMode::imaginary)
                             ? Complex(-dt, 0.0)
                             : Complex(0.0, -dt);
  const Matrix X = factor * FX;
  for (int i = 0; i < d; ++i)
    state.A[i] += rl_ihalf * (Vperp.middleRows(i * D, D) * X) * rr_ihalf;

  // The refresh tolerance bounds the step-to-step energy noise, which in turn
  // sets the gradient level where the flow's descent drops under that noise
  // and accept/reject line searches start misfiring. 1e-14 keeps the noise
  // near arithmetic precision at the cost of a few warm power iterations.
  UmpsEnv next = umps_environments(state, 1e-14, 200000, &env);
  const double s = std::sqrt(next.lambda);
  for (auto& M : state.A) M /= s;
  next.lambda = 1.0;
  env = std::move(next);
  return report;
}

UmpsGroundReport umps_ground_state(UmpsState& state, UmpsEnv& env,
                                   const Matrix& h,
                                   const UmpsGroundOptions& opts) {
  UmpsGroundReport out;
  double dt = opts.dt;
  int success_run = 0;
  int plateau_run = 0;
  double e_prev = umps_energy(state, env, h);

  for (int step = 0; step < opts.max_steps; ++step) {
    const std::vector<Matrix> A_saved = state.A;
    const UmpsEnv env_saved = env;
    UmpsStepReport r =
        umps_tdvp_step(state, env, h, dt, EvolutionMode::imaginary,
                       opts.bicgstab_tol);
    const double e_next = umps_energy(state, env, h);

    if (e_next > e_prev + 1e-14 * std::max(1.0, std::abs(e_prev)) &&
        r.grad_norm > opts.grad_tol) {
      state.A = A_saved;
      env = env_saved;
      dt *= 0.5;
      success_run = 0;
      if (dt < 1e-12) {
        // Degenerate stall (see the block-state driver); keep the best state.
        out.energy = e_prev;
        out.grad_norm = r.grad_norm;
        break;
      }
      continue;
    }

    if (std::abs(e_next - e_prev) <= 1e-16 * std::max(1.0, std::abs(e_prev)) &&
        r.grad_norm > 1e3 * opts.grad_tol)
      ++plateau_run;
    else
      plateau_run = 0;

    e_prev = e_next;
    if (++success_run >= 20 && dt < opts.dt) {
      dt = std::min(opts.dt, dt * 2.0);
      success_run = 0;
    }
    out.energy = e_next;
    out.grad_norm = r.grad_norm;
    out.steps = step + 1;
    if (r.grad_norm <= opts.grad_tol) {
      out.converged = true;
      break;
    }
    if (plateau_run >= 500) break;
  }
  return out;
}

Complex umps_mixed_dominant(const UmpsState& a, const UmpsState& b, double tol,
                            int max_iter) {
  if (a.d != b.d || a.D != b.D)
    throw InvalidArgument("umps_mixed_dominant: dimension mismatch");
  const int D = a.D;
  const LinOp op = [&](const Vector& v) {
    const Matrix rho = unvec(v, D);
    Matrix out = Matrix::Zero(D, D);
    for (int p = 0; p < a.d; ++p) out += a.A[p] * rho * b.A[p].adjoint();
    return vec(out);
  };
  PowerResult pr = power_dominant(op, D * D, tol, max_iter);
  return pr.value;
}

Matrix two_site_hamiltonian(const std::vector<LocalTerm>& terms) {
  if (terms.empty()) throw InvalidArgument("two_site_hamiltonian: no terms");
  int d = 0;
  for (const auto& t : terms) {
    d = static_cast<int>(t.op_a.rows());
    break;
  }
  const Matrix id = Matrix::Identity(d, d);
  Matrix h = Matrix::Zero(d * d, d * d);
  for (const auto& t : terms) {
    if (t.kind == LocalTerm::Kind::two_site)
      h += t.coefficient * kron(t.op_a, t.op_b);
    else
      h += 0.5 * t.coefficient * (kron(t.op_a, id) + kron(id, t.op_a));
  }
  return h;
}

}  // namespace ucps
