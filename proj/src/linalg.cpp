#include "ucps/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <tuple>
#include <vector>

extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace ucps {
namespace {

// The box this targets is single-core and the CSV/checkpoint contracts demand
// reproducible floating-point results, so BLAS threading is pinned once, at
// load time, before any BLAS call can have spun up a thread pool.
__attribute__((constructor)) void pin_blas_threads() {
  setenv("OPENBLAS_NUM_THREADS", "1", 0);
  setenv("OMP_NUM_THREADS", "1", 0);
  if (openblas_set_num_threads) openblas_set_num_threads(1);
}

constexpr double kTiny = 1e-300;

struct RawEigen {
  Vector values;
  Matrix right;
  Matrix left_lapack;  // LAPACK convention: u^H M = lambda u^H
};

RawEigen zgeev_all(const Matrix& M) {
  const int n = static_cast<int>(M.rows());
  Matrix A = M;
  RawEigen out;
  out.values.resize(n);
  out.right.resize(n, n);
  out.left_lapack.resize(n, n);
  int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'V', 'V', n,
      reinterpret_cast<lapack_complex_double*>(A.data()), n,
      reinterpret_cast<lapack_complex_double*>(out.values.data()),
      reinterpret_cast<lapack_complex_double*>(out.left_lapack.data()), n,
      reinterpret_cast<lapack_complex_double*>(out.right.data()), n);
  if (info != 0)
    throw Error("zgeev failed with info=" + std::to_string(info));
  return out;
}

// dgeev packs complex-conjugate pairs into consecutive real columns; unpack
// into full complex vectors.
RawEigen dgeev_all(const RealMatrix& M) {
  const int n = static_cast<int>(M.rows());
  RealMatrix A = M;
  std::vector<double> wr(n), wi(n);
  RealMatrix vl(n, n), vr(n, n);
  int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'V', 'V', n, A.data(), n,
                           wr.data(), wi.data(), vl.data(), n, vr.data(), n);
  if (info != 0)
    throw Error("dgeev failed with info=" + std::to_string(info));
  RawEigen out;
  out.values.resize(n);
  out.right.resize(n, n);
  out.left_lapack.resize(n, n);
  for (int j = 0; j < n; ++j) {
    if (wi[j] == 0.0) {
      out.values(j) = Complex(wr[j], 0.0);
      out.right.col(j) = vr.col(j).cast<Complex>();
      out.left_lapack.col(j) = vl.col(j).cast<Complex>();
    } else {
      out.values(j) = Complex(wr[j], wi[j]);
      out.values(j + 1) = Complex(wr[j], -wi[j]);
      out.right.col(j) = vr.col(j).cast<Complex>() +
                         Complex(0, 1) * vr.col(j + 1).cast<Complex>();
      out.right.col(j + 1) = out.right.col(j).conjugate();
      out.left_lapack.col(j) = vl.col(j).cast<Complex>() +
                               Complex(0, 1) * vl.col(j + 1).cast<Complex>();
      out.left_lapack.col(j + 1) = out.left_lapack.col(j).conjugate();
      ++j;
    }
  }
  return out;
}

// Descending |lambda|, ties by descending real then descending imaginary
// part, all at a relative tolerance so the order is stable under noise.
std::vector<int> sort_order(const Vector& values) {
  const int n = static_cast<int>(values.size());
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(values(i)));
  const double tol = 1e-12 * std::max(scale, kTiny);
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const Complex za = values(a), zb = values(b);
    if (std::abs(std::abs(za) - std::abs(zb)) > tol)
      return std::abs(za) > std::abs(zb);
    if (std::abs(za.real() - zb.real()) > tol) return za.real() > zb.real();
    if (std::abs(za.imag() - zb.imag()) > tol) return za.imag() > zb.imag();
    return false;
  });
  return idx;
}

void fix_phase_unit(Vector& v) {
  int imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const Complex piv = v(imax);
  if (std::abs(piv) > 0.0) v *= std::abs(piv) / piv;
  const double nrm = v.norm();
  if (nrm > 0.0) v /= nrm;
}

}  // namespace

void ensure_finite(const Matrix& M, const char* what) {
  if (!M.allFinite())
    throw InvalidArgument(std::string(what) + " contains NaN or Inf entries");
}

double EigenSystem::biorthogonality_error() const {
  Matrix G = left.transpose() * right;
  G.diagonal().array() -= 1.0;
  return G.cwiseAbs().maxCoeff();
}

double EigenSystem::reconstruction_error(const Matrix& M) const {
  Matrix R = Matrix::Zero(M.rows(), M.cols());
  for (int a = 0; a < size(); ++a)
    R += values(a) * right.col(a) * left.col(a).transpose();
  const double scale = std::max(M.cwiseAbs().maxCoeff(), kTiny);
  return (R - M).cwiseAbs().maxCoeff() / scale;
}

EigenSystem full_eigendecomposition(const Matrix& M) {
  if (M.rows() != M.cols())
    throw InvalidArgument("full_eigendecomposition requires a square matrix");
  ensure_finite(M, "full_eigendecomposition input");
  const int n = static_cast<int>(M.rows());

  const bool is_real = M.imag().cwiseAbs().maxCoeff() == 0.0;
  RawEigen raw = is_real ? dgeev_all(M.real()) : zgeev_all(M);

  const std::vector<int> order = sort_order(raw.values);
  EigenSystem sys;
  sys.values.resize(n);
  sys.right.resize(n, n);
  sys.left.resize(n, n);
  for (int k = 0; k < n; ++k) {
    const int j = order[k];
    sys.values(k) = raw.values(j);
    sys.right.col(k) = raw.right.col(j);
    // LAPACK's u satisfies u^H M = lambda u^H; the unconjugated left
    // eigenvector (w^T M = lambda w^T) is its complex conjugate.
    sys.left.col(k) = raw.left_lapack.col(j).conjugate();
  }
  for (int k = 0; k < n; ++k) {
    Vector v = sys.right.col(k);
    fix_phase_unit(v);
    sys.right.col(k) = v;
  }

  // Biorthonormalise left against right, cluster by cluster.
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(sys.values(i)));
  const double ctol = 1e-10 * std::max(scale, 1.0);
  int k = 0;
  while (k < n) {
    int e = k + 1;
    while (e < n && std::abs(sys.values(e) - sys.values(e - 1)) <= ctol) ++e;
    const int m = e - k;
    Matrix S = sys.left.middleCols(k, m).transpose() * sys.right.middleCols(k, m);
    Eigen::PartialPivLU<Matrix> lu(S);
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (min_pivot < 1e-12)
      throw DefectiveMatrix(
          "biorthonormalisation pivot " + std::to_string(min_pivot) +
          " below 1e-12 in an eigenvalue cluster of size " + std::to_string(m));
    Matrix Sinv = lu.inverse();
    sys.left.middleCols(k, m) = sys.left.middleCols(k, m) * Sinv.transpose();
    k = e;
  }
  return sys;
}

PowerResult power_dominant(const LinOp& op, int dim, double tol, int max_iter,
                           const Vector& start) {
  Vector v = start.size() ? start : Vector::Ones(dim).eval();
  double nrm = v.norm();
  if (nrm == 0.0) throw InvalidArgument("power iteration started from zero");
  v /= nrm;
  Complex lambda = 0.0;
  double resid = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Vector w = op(v);
    lambda = v.dot(w);  // v is unit norm, so this is the Rayleigh quotient
    resid = (w - lambda * v).norm();
    if (resid <= tol * std::max(std::abs(lambda), 1e-30))
      return {lambda, v, it, resid};
    const double wn = w.norm();
    if (wn < kTiny) return {0.0, v, it, 0.0};  // operator annihilates v
    v = w / wn;
  }
  throw ConvergenceFailure("power iteration did not converge", max_iter, resid);
}

EigenPair dominant_eigenpair(const Matrix& M, double tol, int max_iter) {
  if (M.rows() != M.cols())
    throw InvalidArgument("dominant_eigenpair requires a square matrix");
  ensure_finite(M, "dominant_eigenpair input");
  const int n = static_cast<int>(M.rows());
  PowerResult r = power_dominant([&](const Vector& v) { return (M * v).eval(); },
                                 n, tol, max_iter);
  PowerResult l = power_dominant(
      [&](const Vector& v) { return (M.transpose() * v).eval(); }, n, tol,
      max_iter);
  EigenPair pair;
  pair.value = r.value;
  pair.right = r.vec;
  int imax = 0;
  pair.right.cwiseAbs().maxCoeff(&imax);
  pair.right /= pair.right(imax);  // largest entry exactly 1
  const Complex overlap = l.vec.transpose() * pair.right;
  if (std::abs(overlap) < 1e-14)
    throw ConvergenceFailure("dominant left/right vectors are orthogonal",
                             std::max(r.iterations, l.iterations),
                             std::max(r.residual, l.residual));
  pair.left = l.vec / overlap;
  pair.iterations = std::max(r.iterations, l.iterations);
  pair.residual = std::max(r.residual, l.residual);
  return pair;
}

PowerResult deflated_power_dominant(
    const LinOp& op, int dim,
    const std::vector<std::tuple<Complex, Vector, Vector>>& deflations,
    double tol, int max_iter, std::uint64_t seed, int restarts) {
  LinOp deflated = [&](const Vector& v) {
    Vector w = op(v);
    for (const auto& [lam, lvec, rvec] : deflations)
      w -= lam * rvec * (lvec.transpose() * v);
    return w;
  };
  bool have = false;
  PowerResult best;
  ConvergenceFailure last("no restarts ran", 0, 0.0);
  for (int t = 0; t < restarts; ++t) {
    Rng rng(seed + static_cast<std::uint64_t>(t));
    Vector start(dim);
    for (int i = 0; i < dim; ++i) start(i) = rng.complex_gaussian();
    try {
      PowerResult r = power_dominant(deflated, dim, tol, max_iter, start);
      if (!have || std::abs(r.value) > std::abs(best.value)) {
        best = r;
        have = true;
      }
    } catch (const ConvergenceFailure& f) {
      last = f;
    }
  }
  if (!have) throw last;
  return best;
}

Vector bicgstab(const LinOp& apply_a, const LinOp& precond, const Vector& b,
                double tol, int max_iter, const Vector* x0,
                BicgstabReport* report, Vector* best_x) {
  const double bnorm = b.norm();
  Vector x = (x0 && x0->size() == b.size()) ? *x0
                                            : Vector::Zero(b.size()).eval();
  if (bnorm == 0.0) {
    if (report) *report = {0, 0.0};
    if (best_x) *best_x = Vector::Zero(b.size());
    return Vector::Zero(b.size());
  }
  Vector r = b - apply_a(x);
  // A warm start that is worse than the trivial zero start (relative residual
  // above 1) only poisons the Krylov process; drop it.
  if (x.squaredNorm() != 0.0 && r.norm() > bnorm) {
    x.setZero();
    r = b;
  }
  Vector rhat = r;
  Vector p = Vector::Zero(b.size()), v = Vector::Zero(b.size());
  Complex rho_prev = 1.0, alpha = 1.0, omega = 1.0;
  double resid = r.norm() / bnorm;
  Vector xb = x;
  double residb = resid;
  int restarts = 0;
  int it_done = 0;
  // Stagnation watchdog: on near-singular systems the attainable residual
  // floors far above tol and extra iterations are pure waste. Give up early
  // when the best residual has not improved by 1% over a window.
  constexpr int kStagnationWindow = 60;
  double anchor = residb;
  int anchor_it = 0;
  const auto track = [&]() {
    if (resid < residb && x.allFinite()) {
      residb = resid;
      xb = x;
    }
  };
  const auto finish = [&](int it) -> bool {
    const double true_resid = (b - apply_a(x)).norm() / bnorm;
    if (true_resid <= tol) {
      if (report) *report = {it, true_resid};
      return true;
    }
    resid = true_resid;  // the recurrence drifted; fall through to a restart
    track();
    return false;
  };
  // Breakdown or drift: restart the Krylov process from the current iterate
  // with a fresh shadow residual. Returns false when the restart budget is
  // exhausted.
  const auto restart = [&]() -> bool {
    if (++restarts > 50) return false;
    if (!x.allFinite()) x = xb;
    r = b - apply_a(x);
    rhat = r;
    p.setZero();
    v.setZero();
    rho_prev = alpha = omega = 1.0;
    resid = r.norm() / bnorm;
    track();
    return true;
  };
  if (resid <= tol && finish(0)) return x;
  for (int it = 1; it <= max_iter; ++it) {
    it_done = it;
    if (it - anchor_it >= kStagnationWindow) {
      if (residb > 0.99 * anchor) break;
      anchor = residb;
      anchor_it = it;
    }
    const Complex rho = rhat.dot(r);
    if (std::abs(rho) < 1e-14 * rhat.norm() * r.norm()) {
      if (restart()) continue;
      break;
    }
    const Complex beta = (rho / rho_prev) * (alpha / omega);
    p = r + beta * (p - omega * v);
    const Vector phat = precond(p);
    v = apply_a(phat);
    const Complex rv = rhat.dot(v);
    if (std::abs(rv) < 1e-14 * rhat.norm() * v.norm()) {
      if (restart()) continue;
      break;
    }
    alpha = rho / rv;
    const Vector s = r - alpha * v;
    if (s.norm() / bnorm <= tol) {
      x += alpha * phat;
      resid = s.norm() / bnorm;
      track();
      if (finish(it)) return x;
      if (restart()) continue;
      break;
    }
    const Vector shat = precond(s);
    const Vector t = apply_a(shat);
    const double tt = t.squaredNorm();
    if (tt < kTiny) {
      if (restart()) continue;
      break;
    }
    omega = t.dot(s) / tt;
    if (std::abs(omega) < 1e-14) {
      x += alpha * phat;
      resid = (b - apply_a(x)).norm() / bnorm;
      track();
      if (restart()) continue;
      break;
    }
    x += alpha * phat + omega * shat;
    r = s - omega * t;
    resid = r.norm() / bnorm;
    track();
    if (resid <= tol && finish(it)) return x;
    rho_prev = rho;
  }
  const double true_best = (b - apply_a(xb)).norm() / bnorm;
  if (report) *report = {it_done, true_best};
  if (best_x) *best_x = xb;
  throw ConvergenceFailure("BiCGStab did not converge", it_done, true_best);
}

RealVector singular_values(const Matrix& M) {
  Eigen::BDCSVD<Matrix> svd(M);
  return svd.singularValues();
}

Matrix psd_sqrt(const Matrix& M) {
  if (M.rows() != M.cols())
    throw InvalidArgument("psd_sqrt requires a square matrix");
  Matrix H = 0.5 * (M + M.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  if (es.info() != Eigen::Success) throw Error("psd_sqrt eigensolver failed");
  RealVector ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), kTiny);
  RealVector root(ev.size());
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-10 * scale)
      throw NotPositiveSemidefinite("psd_sqrt: eigenvalue " +
                                    std::to_string(ev(i)) + " below tolerance");
    root(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

double magnitude_floor(const Matrix& M, double rel) {
  std::vector<double> mags(M.size());
  for (Eigen::Index i = 0; i < M.size(); ++i) mags[i] = std::abs(M(i));
  const std::size_t mid = (mags.size() - 1) / 2;
  std::nth_element(mags.begin(), mags.begin() + mid, mags.end());
  double med = mags[mid];
  if (med <= 0.0) med = *std::max_element(mags.begin(), mags.end());
  return rel * std::max(med, kTiny);
}

Matrix regularized_reciprocal(const Matrix& M, double floor_abs,
                              long* clamp_count) {
  Matrix R(M.rows(), M.cols());
  for (Eigen::Index i = 0; i < M.size(); ++i) {
    Complex x = M(i);
    const double a = std::abs(x);
    if (a < floor_abs) {
      if (clamp_count) ++*clamp_count;
      x = (a == 0.0) ? Complex(floor_abs, 0.0) : x * (floor_abs / a);
    }
    R(i) = 1.0 / x;
  }
  return R;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

Complex Rng::complex_gaussian() {
  const double re = gaussian();
  return {re, gaussian()};
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_ << " " << (have_spare_ ? 1 : 0) << " ";
  os << std::hexfloat << spare_;
  return os.str();
}

Rng Rng::deserialize(const std::string& text) {
  Rng rng(0);
  std::istringstream is(text);
  is >> rng.engine_;
  int flag = 0;
  is >> flag;
  rng.have_spare_ = flag != 0;
  std::string spare;
  is >> spare;
  rng.spare_ = spare.empty() ? 0.0 : std::strtod(spare.c_str(), nullptr);
  if (is.fail()) throw InvalidArgument("Rng::deserialize: malformed state");
  return rng;
}

}  // namespace ucps
