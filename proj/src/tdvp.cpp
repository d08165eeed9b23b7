#include "ucps/tdvp.hpp"

#include <cmath>
#include <filesystem>

#include "ucps/serialize.hpp"

namespace ucps {
namespace {

void check_normalized(const SpectralEnvironment& env, const char* what) {
  if (std::abs(env.lambda1() - 1.0) > 1e-6)
    throw InvalidArgument(std::string(what) +
                          " requires a normalised state (|lambda1 - 1| = " +
                          std::to_string(std::abs(env.lambda1() - 1.0)) + ")");
}

void check_tangent_shape(const Matrix& B, int D, const char* what) {
  if (B.rows() != D - 1 || B.cols() != D)
    throw InvalidArgument(std::string(what) +
                          ": tangent coefficients must be (D-1) x D");
}

// lambda_ij = vl_i vr_j / E_ij, the same-site weight of the tangent overlap.
Matrix lambda_weights(const SpectralEnvironment& env, long* clamp_count) {
  const Matrix E = env.E.cast<Complex>();
  const Matrix recip_E =
      regularized_reciprocal(E, magnitude_floor(E), clamp_count);
  return (env.vl() * env.vr().transpose()).cwiseProduct(recip_E);
}

Vector vec(const Matrix& M) {
  return Eigen::Map<const Vector>(M.data(), M.size());
}

Matrix unvec(const Vector& v, int rows, int cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace

Matrix tangent_to_dC(const UcpsState& state, const SpectralEnvironment& env,
                     const Matrix& B, long* clamp_count) {
  const int D = state.dim;
  check_tangent_shape(B, D, "tangent_to_dC");
  const Matrix recip_cbar = regularized_reciprocal(
      state.C.conjugate(), magnitude_floor(state.C), clamp_count);
  const Matrix P = env.sys.right.rightCols(D - 1) *
                   (B * env.sys.left.transpose());
  return P.cwiseProduct(recip_cbar);
}

Matrix gram_apply(const UcpsState& state, const SpectralEnvironment& env,
                  const Matrix& B, long* clamp_count) {
  const int D = state.dim;
  check_tangent_shape(B, D, "gram_apply");
  const Matrix lam = lambda_weights(env, clamp_count);
  const auto R_sub = env.sys.right.rightCols(D - 1);
  const Matrix P = R_sub * (B * env.sys.left.transpose());
  const Matrix Q = lam.cwiseProduct(P);
  return R_sub.adjoint() * Q * env.sys.left.conjugate();
}

// Built from the biorthogonality left^T right = I: with S: B -> R~ B L^T the
// Gram action is G = S* (lam o S(B)), and replacing the rectangular inverses
// by the dual family gives G' = S^-1 (recip(lam) o S^-*(B)) with
// S^-1(M) = L~^T M R and S^-*(B) = conj(L~) B R^dagger. Exact inverse
// whenever the elementwise weight preserves range(S); approximate otherwise.
Matrix precond_apply(const UcpsState& state, const SpectralEnvironment& env,
                     const Matrix& B, long* clamp_count) {
  const int D = state.dim;
  check_tangent_shape(B, D, "precond_apply");
  const Matrix lam = lambda_weights(env, nullptr);
  const Matrix recip_lam =
      regularized_reciprocal(lam, magnitude_floor(lam), clamp_count);
  const auto L_sub = env.sys.left.rightCols(D - 1);
  const Matrix P = L_sub.conjugate() * (B * env.sys.right.adjoint());
  const Matrix Q = recip_lam.cwiseProduct(P);
  return L_sub.transpose() * Q * env.sys.right;
}

double block_energy(const UcpsState& state, const SpectralEnvironment& env,
                    const BlockHamiltonian& H) {
  Complex e = expectation_one_block(state, env, H.intra_total_unshifted());
  for (const auto& [h1, h2] : H.boundary)
    e += expectation_two_block(state, env, h1, h2);
  if (std::abs(e.imag()) > 1e-10 * std::max(1.0, std::abs(e)))
    throw Error("block_energy: expectation has a large imaginary part " +
                std::to_string(e.imag()));
  return e.real();
}

Matrix rhs_gradient(const UcpsState& state, const SpectralEnvironment& env,
                    const BlockHamiltonian& H, long* clamp_count) {
  const int D = state.dim;
  if (H.dim != D) throw InvalidArgument("rhs_gradient: Hamiltonian dimension");
  check_normalized(env, "rhs_gradient");

  const Matrix& C = state.C;
  const Matrix Cc = C.conjugate();
  const Vector vl = env.vl();
  const Matrix rmat = right_env_matrix(state, env);
  const Vector r_diag = rmat.diagonal();

  // Shared left sandwich X_L(b, bbar) = sum_a vl_a C_ab conj(C_a bbar).
  const Matrix X_L = C.transpose() * vl.asDiagonal() * Cc;

  const Matrix h_in = H.intra_total();  // sum of intra terms minus the shift
  Matrix M = Matrix::Zero(D, D);        // d<H>/d conj(C) hole contractions

  // Hole on the operator's own block (single-block terms).
  M += vl.asDiagonal() * C * rmat.cwiseProduct(h_in.transpose());
  // Left message with the term absorbed, for the strictly-right tail.
  Matrix L_sum = X_L.cwiseProduct(h_in.transpose());

  for (const auto& [h1, h2] : H.boundary) {
    const Matrix Rh2 = rmat.cwiseProduct(h2.transpose());
    // Hole on the first block: absorb h2 and one transfer from the right.
    const Matrix R1 = C * Rh2 * C.adjoint();
    M += vl.asDiagonal() * C * R1.cwiseProduct(h1.transpose());
    // Hole on the second block: absorb h1 from the left.
    const Matrix L1 = X_L.cwiseProduct(h1.transpose());
    M += L1.transpose() * C * Rh2;
    L_sum += (C.transpose() * L1 * Cc).cwiseProduct(h2.transpose());
  }

  // Strictly-right placements. Adjacent hole sees the full left message; one
  // pure transfer later the message is diagonal and the remaining geometric
  // series is summed through the transfer spectrum with the dominant
  // component dropped.
  M += L_sum.transpose() * C * r_diag.asDiagonal();
  const Matrix Y = C.transpose() * L_sum;
  const Vector w0 = Y.transpose().cwiseProduct(Cc).colwise().sum().transpose();
  Vector coeff = env.sys.right.rightCols(D - 1).transpose() * w0;
  for (int a = 1; a < D; ++a) {
    const Complex gap = 1.0 - env.lambda(a);
    if (std::abs(gap) < 1e-10)
      throw NearDegenerateTransfer(
          "rhs_gradient: subdominant transfer eigenvalue within 1e-10 of 1");
    coeff(a - 1) /= gap;
  }
  const Vector u = env.sys.left.rightCols(D - 1) * coeff;
  M += u.asDiagonal() * C * r_diag.asDiagonal();

  // Project the hole derivative onto the tangent basis: the bra-side tangent
  // carries conjugated eigenvector factors and a 1/C_ik from the chain rule.
  const Matrix N = M.cwiseProduct(
      regularized_reciprocal(C, magnitude_floor(C), clamp_count));
  return env.sys.right.rightCols(D - 1).adjoint() * N *
         env.sys.left.conjugate();
}

namespace {

struct TangentSolve {
  Vector x;
  int iterations = 0;
  int path = -1;  // index into the attempt ladder; -1 = steepest fallback
};

// Solve G x = f for the tangent coefficients. The Gram matrix is Hermitian
// PSD but its conditioning varies wildly along the flow (near product-like
// states it is effectively singular, with eigenvalues spanning 1e14), so an
// exact solve is often unattainable in double precision. Ladder of attempts:
// preconditioned, plain, then Tikhonov-shifted plain solves (G + mu I) x = f
// with growing mu. Any PSD shift still yields a descent direction (slope
// 2 Re<x,f> > 0); mu just damps the flat directions an exact solve would
// amplify into garbage. A rung that stagnates on a descent iterate with
// relative residual < 0.9 is accepted immediately: that is the attainable
// floor, and laddering on would only burn the iteration budget. `hint`
// fronts the rung that won the previous step, so steady-state flow pays for
// exactly one attempt per step.
TangentSolve solve_tangent(const UcpsState& state,
                           const SpectralEnvironment& env, const Vector& f,
                           const SolverOptions& solver, const Vector* x0_ptr,
                           int hint) {
  const int D = state.dim;
  const LinOp apply_g = [&](const Vector& v) {
    return vec(gram_apply(state, env, unvec(v, D - 1, D)));
  };
  const LinOp apply_p = [&](const Vector& v) {
    return vec(precond_apply(state, env, unvec(v, D - 1, D)));
  };
  const LinOp identity_pc = [](const Vector& v) { return v; };
  const double f2 = std::real(f.dot(f));
  double curv = -1.0;  // curvature scale along f, computed on first use
  const auto curv_scale = [&]() {
    if (curv < 0.0) {
      const Vector gf = apply_g(f);
      curv = f2 > 0.0 ? std::abs(std::real(f.dot(gf))) / f2 : 1.0;
      if (!(curv > 0.0)) curv = 1.0;
    }
    return curv;
  };
  struct Attempt {
    bool precond;
    double mu_rel;
  };
  constexpr Attempt kAttempts[] = {
      {true, 0.0}, {false, 0.0}, {false, 1e-6}, {false, 1e-2}};
  constexpr int kNumAttempts = 4;
  int order[kNumAttempts] = {0, 1, 2, 3};
  if (hint > 0 && hint < kNumAttempts) {
    order[0] = hint;
    for (int i = 1; i <= hint; ++i) order[i] = i - 1;
  }
  TangentSolve out;
  bool first_attempt = true;
  for (const int idx : order) {
    const Attempt& attempt = kAttempts[idx];
    const double mu =
        attempt.mu_rel > 0.0 ? attempt.mu_rel * curv_scale() : 0.0;
    const LinOp apply_shifted = [&](const Vector& v) {
      Vector w = apply_g(v);
      if (mu > 0.0) w += mu * v;
      return w;
    };
    BicgstabReport breport;
    Vector best;
    // Warm starts only help the primary attempt; retries start clean.
    const Vector* start = first_attempt ? x0_ptr : nullptr;
    first_attempt = false;
    try {
      out.x = bicgstab(apply_shifted,
                       attempt.precond ? apply_p : identity_pc, f,
                       solver.bicgstab_tol, solver.bicgstab_max_iter, start,
                       &breport, &best);
    } catch (const ConvergenceFailure&) {
      // A stagnated iterate with a solid residual is still a far better
      // direction than raw steepest descent; take it and stop.
      if (best.size() == f.size() && best.allFinite() &&
          breport.residual < 0.9 && 2.0 * std::real(best.dot(f)) > 0.0) {
        out.x = best;
        out.iterations = breport.iterations;
        out.path = idx;
        return out;
      }
      continue;
    }
    if (out.x.allFinite() && 2.0 * std::real(out.x.dot(f)) > 0.0) {
      out.iterations = breport.iterations;
      out.path = idx;
      return out;
    }
  }
  // Scaled steepest descent: exact descent direction, curvature-normalised
  // so the caller's dt keeps its meaning.
  out.x = f / std::max(curv_scale(), 1e-300);
  out.iterations = -1;
  out.path = -1;
  return out;
}

}  // namespace

TdvpStepReport tdvp_step(UcpsState& state, const SpectralEnvironment& env,
                         const BlockHamiltonian& H, double dt,
                         EvolutionMode mode, const SolverOptions& solver,
                         const Matrix* warm_B, int path_hint) {
  const int D = state.dim;
  TdvpStepReport report;
  const double e_block = block_energy(state, env, H);
  report.energy = e_block / H.n;
  report.dt_used = dt;

  BlockHamiltonian Hs = H;
  Hs.energy_shift = e_block;
  const Matrix F = rhs_gradient(state, env, Hs, &report.clamps);
  report.gradient_norm = F.norm();

  Vector x0;
  const Vector* x0_ptr = nullptr;
  if (warm_B && warm_B->rows() == D - 1 && warm_B->cols() == D) {
    x0 = vec(*warm_B);
    x0_ptr = &x0;
  }
  const TangentSolve solve =
      solve_tangent(state, env, vec(F), solver, x0_ptr, path_hint);
  report.bicgstab_iters = solve.iterations;
  report.solve_path = solve.path;
  report.B = unvec(solve.x, D - 1, D);

  const Matrix dC = tangent_to_dC(state, env, report.B, &report.clamps);
  if (mode == EvolutionMode::imaginary)
    state.C -= dt * dC;
  else
    state.C -= Complex(0.0, dt) * dC;
  report.renormalisation_factor = std::sqrt(normalize(state));
  return report;
}

GroundStateReport ground_state(UcpsState& state, const BlockHamiltonian& H,
                               const GroundStateOptions& opts) {
  GroundStateReport out;
  double dt = opts.dt;
  int success_run = 0;
  int plateau_run = 0;
  long step0 = 0;
  int hint = -1;
  Matrix warmB;

  if (!opts.checkpoint_path.empty() &&
      std::filesystem::exists(opts.checkpoint_path)) {
    TdvpCheckpoint ck = load_checkpoint(opts.checkpoint_path);
    state = ck.state;
    step0 = ck.step;
    dt = ck.dt;
    success_run = ck.success_run;
    warmB = ck.warm_B;
  }

  normalize(state);
  SpectralEnvironment env = environments(state);
  double e_prev = block_energy(state, env, H) / H.n;

  for (long step = step0; step < opts.max_steps; ++step) {
    const Matrix C_saved = state.C;
    TdvpStepReport r =
        tdvp_step(state, env, H, dt, EvolutionMode::imaginary, opts.solver,
                  warmB.size() ? &warmB : nullptr, hint);
    SpectralEnvironment env_next = environments(state);
    const double e_next = block_energy(state, env_next, H) / H.n;

    // Monotonicity guard with a roundoff allowance: an "increase" at the
    // level of double-precision jitter is not a bad step.
    if (e_next > e_prev + 1e-14 * std::max(1.0, std::abs(e_prev)) &&
        r.gradient_norm > opts.grad_tol) {
      // Reject: restore the state, halve dt, keep the old environment.
      state.C = C_saved;
      dt *= 0.5;
      success_run = 0;
      if (dt < 1e-12) {
        // The flow has stalled at a point where the tangent metric is
        // degenerate (typically an exact product state). Keep the best state.
        out.energy = e_prev;
        out.gradient_norm = r.gradient_norm;
        break;
      }
      continue;
    }

    // Energy frozen at machine precision while the gradient is stuck far
    // above tolerance is the same degenerate stall; stop instead of burning
    // the step budget. A gradient within 1000x of tolerance is still making
    // progress and is left to run.
    if (std::abs(e_next - e_prev) <= 1e-16 * std::max(1.0, std::abs(e_prev)) &&
        r.gradient_norm > 1e3 * opts.grad_tol)
      ++plateau_run;
    else
      plateau_run = 0;

    env = std::move(env_next);
    e_prev = e_next;
    warmB = r.B;
    hint = r.solve_path;
    if (++success_run >= 20 && dt < opts.dt) {
      dt = std::min(opts.dt, dt * 2.0);
      success_run = 0;
    }
    out.energy = e_next;
    out.gradient_norm = r.gradient_norm;
    out.steps = static_cast<int>(step) + 1;
    if (opts.on_step) opts.on_step(out.steps, e_next, r.gradient_norm);
    if (!opts.checkpoint_path.empty() &&
        (step + 1) % opts.checkpoint_every == 0)
      save_checkpoint(opts.checkpoint_path,
                      {state, step + 1, dt, success_run, warmB});
    if (r.gradient_norm <= opts.grad_tol) {
      out.converged = true;
      break;
    }
    if (plateau_run >= 500) break;
  }
  return out;
}

namespace {

// Fehlberg 4(5) tableau.
constexpr double kA[6][5] = {
    {0, 0, 0, 0, 0},
    {1.0 / 4, 0, 0, 0, 0},
    {3.0 / 32, 9.0 / 32, 0, 0, 0},
    {1932.0 / 2197, -7200.0 / 2197, 7296.0 / 2197, 0, 0},
    {439.0 / 216, -8.0, 3680.0 / 513, -845.0 / 4104, 0},
    {-8.0 / 27, 2.0, -3544.0 / 2565, 1859.0 / 4104, -11.0 / 40}};
constexpr double kB5[6] = {16.0 / 135,      0, 6656.0 / 12825,
                           28561.0 / 56430, -9.0 / 50, 2.0 / 55};
constexpr double kB4[6] = {25.0 / 216, 0, 1408.0 / 2565, 2197.0 / 4104,
                           -1.0 / 5, 0};

}  // namespace

void evolve(UcpsState& state, const BlockHamiltonian& H,
            const EvolveOptions& opts, const EvolveObserver& observer) {
  normalize(state);
  double t = 0.0;
  double dt = opts.dt_init;
  Matrix warmB;

  if (!opts.checkpoint_path.empty() &&
      std::filesystem::exists(opts.checkpoint_path)) {
    TdvpCheckpoint ck = load_checkpoint(opts.checkpoint_path);
    state = ck.state;
    t = ck.time;
    dt = ck.dt;
    warmB = ck.warm_B;
  }

  // Schroedinger right-hand side projected onto the tangent space, evaluated
  // on a renormalised copy of the stage state.
  int hint = -1;
  auto derivative = [&](const Matrix& C_stage) {
    UcpsState s(state.n, C_stage);
    normalize(s);
    SpectralEnvironment env = environments(s);
    BlockHamiltonian Hs = H;
    Hs.energy_shift = block_energy(s, env, H);
    long clamps = 0;
    const Matrix F = rhs_gradient(s, env, Hs, &clamps);
    const int D = s.dim;
    Vector x0v;
    const Vector* x0 = nullptr;
    if (warmB.size()) {
      x0v = vec(warmB);
      x0 = &x0v;
    }
    const TangentSolve solve =
        solve_tangent(s, env, vec(F), opts.solver, x0, hint);
    hint = solve.path;
    warmB = unvec(solve.x, D - 1, D);
    return Matrix(Complex(0, -1) * tangent_to_dC(s, env, warmB));
  };

  const double grid_eps = 1e-12 * std::max(1.0, opts.t_max);
  long next_grid = std::lround(std::floor(t / opts.out_dt + 0.5));
  if (std::abs(t - next_grid * opts.out_dt) <= grid_eps) {
    observer(next_grid * opts.out_dt, state);
    ++next_grid;
  }

  long accepted = 0;
  for (int step = 0; step < opts.max_steps && t < opts.t_max - grid_eps;
       ++step) {
    const double t_target =
        std::min(opts.t_max, next_grid * opts.out_dt);
    double h = std::min(dt, t_target - t);
    if (h < opts.dt_min)
      throw ConvergenceFailure("evolve: step size underflow", step, h);

    Matrix k[6];
    k[0] = derivative(state.C);
    for (int i = 1; i < 6; ++i) {
      Matrix arg = state.C;
      for (int j = 0; j < i; ++j)
        if (kA[i][j] != 0.0) arg += (h * kA[i][j]) * k[j];
      k[i] = derivative(arg);
    }
    Matrix c5 = state.C, err = Matrix::Zero(state.dim, state.dim);
    for (int i = 0; i < 6; ++i) {
      if (kB5[i] != 0.0) c5 += (h * kB5[i]) * k[i];
      const double diff = kB5[i] - kB4[i];
      if (diff != 0.0) err += (h * diff) * k[i];
    }
    const double scale =
        opts.rel_tol * std::max(1.0, state.C.norm());
    const double err_ratio = err.norm() / scale;

    if (err_ratio <= 1.0) {
      state.C = c5;
      normalize(state);
      t += h;
      ++accepted;
      if (std::abs(t - next_grid * opts.out_dt) <= grid_eps) {
        t = next_grid * opts.out_dt;
        observer(t, state);
        ++next_grid;
      }
      if (!opts.checkpoint_path.empty() &&
          accepted % opts.checkpoint_every == 0)
        save_checkpoint(opts.checkpoint_path, {state, accepted, dt, 0, warmB, t});
    }
    const double factor =
        (err_ratio > 0.0) ? 0.9 * std::pow(err_ratio, -0.2) : 5.0;
    dt = h * std::clamp(factor, 0.2, 5.0);
  }
}

}  // namespace ucps
