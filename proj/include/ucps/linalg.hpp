// Dense linear algebra used by the correlator-product-state code: full
// non-symmetric eigendecompositions with biorthonormal left/right vectors,
// a power-iteration dominant eigensolver, preconditioned BiCGStab, and a few
// small helpers (regularised elementwise reciprocals, PSD square roots,
// deterministic Gaussian sampling).
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace ucps {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Biorthonormalisation pivot fell below threshold: the matrix has a
// (numerically) defective eigenvalue cluster.
struct DefectiveMatrix : Error {
  using Error::Error;
};

// An iterative routine (power iteration, BiCGStab) ran out of iterations or
// hit a breakdown. Carries the iteration count and last residual.
struct ConvergenceFailure : Error {
  ConvergenceFailure(const std::string& what, int iterations, double residual)
      : Error(what + " (iterations=" + std::to_string(iterations) +
              ", residual=" + std::to_string(residual) + ")"),
        iterations(iterations),
        residual(residual) {}
  int iterations = 0;
  double residual = 0.0;
};

// A subdominant transfer eigenvalue sits within 1e-10 of 1, so the geometric
// series over transfer applications has no usable inverse.
struct NearDegenerateTransfer : Error {
  using Error::Error;
};

struct NotPositiveSemidefinite : Error {
  using Error::Error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

// Throws InvalidArgument if any entry of M is NaN/Inf. `what` names the
// offending object in the message.
void ensure_finite(const Matrix& M, const char* what);

// Full eigendecomposition of a square matrix. Columns of `right`/`left` hold
// the eigenvectors; pairs satisfy the unconjugated duality
// left.col(a).transpose() * right.col(b) = delta_ab. Eigenvalues are sorted
// by descending |lambda|, ties broken by descending real then descending
// imaginary part. Right vectors have unit 2-norm with their largest-magnitude
// entry rotated to the positive real axis.
struct EigenSystem {
  Vector values;
  Matrix right;
  Matrix left;
  int size() const { return static_cast<int>(values.size()); }
  // max_ab |(left^T right - I)_ab|, for diagnostics and tests.
  double biorthogonality_error() const;
  // max |(sum_a lambda_a right_a left_a^T - M)| relative to max|M|.
  double reconstruction_error(const Matrix& M) const;
};

// Dense eigendecomposition via LAPACK (dgeev fast path for real input, zgeev
// otherwise), followed by cluster-by-cluster biorthonormalisation. Throws
// DefectiveMatrix when a cluster's overlap matrix has a pivot below 1e-12.
EigenSystem full_eigendecomposition(const Matrix& M);

struct EigenPair {
  Complex value;
  Vector left;   // scaled so that left.transpose() * right == 1
  Vector right;  // infinity-norm 1, largest entry rotated real-positive
  int iterations = 0;
  double residual = 0.0;
};

using LinOp = std::function<Vector(const Vector&)>;

// Dominant eigenpair of a matrix-free operator by power iteration. `start`
// may be empty (defaults to the all-ones vector). Residual is
// |op(v) - lambda v|_2 measured with |v|_2 = 1; convergence requires
// residual <= tol * max(|lambda|, tiny). Throws ConvergenceFailure.
struct PowerResult {
  Complex value;
  Vector vec;
  int iterations = 0;
  double residual = 0.0;
};
PowerResult power_dominant(const LinOp& op, int dim, double tol, int max_iter,
                           const Vector& start = Vector());

// Two-sided dominant eigenpair of a dense matrix (power iteration on M and
// M^T). Throws ConvergenceFailure with the last residual if either side
// fails to converge within max_iter.
EigenPair dominant_eigenpair(const Matrix& M, double tol = 1e-12,
                             int max_iter = 100000);

// Power iteration with explicit rank-1 deflations (value, left, right) and a
// few random restarts; used for subdominant transfer eigenvalues. Returns the
// best converged restart (largest |lambda|).
PowerResult deflated_power_dominant(
    const LinOp& op, int dim,
    const std::vector<std::tuple<Complex, Vector, Vector>>& deflations,
    double tol, int max_iter, std::uint64_t seed, int restarts = 4);

struct BicgstabReport {
  int iterations = 0;
  double residual = 0.0;  // relative true residual |Ax-b|/|b| at exit
};

// Right-preconditioned BiCGStab for square complex systems. `precond` applies
// an approximate inverse of A (pass identity for none). On success the true
// residual satisfies |A x - b| <= tol * |b|. Breakdown of the recurrence
// (|rho|, |r^H v| or |omega| below 1e-14 at scale) restarts the Krylov
// process from the current iterate with a fresh shadow residual, up to 50
// times. Stagnation (best residual not improving by 1% over a 60-iteration
// window, the floor behaviour of near-singular systems) gives up early.
// Non-convergence throws ConvergenceFailure carrying the iteration count and
// the best relative true residual reached; when `best_x` is non-null it
// receives that best iterate (useful as an inexact direction even when the
// tolerance was missed).
Vector bicgstab(const LinOp& apply_a, const LinOp& precond, const Vector& b,
                double tol = 1e-10, int max_iter = 500,
                const Vector* x0 = nullptr, BicgstabReport* report = nullptr,
                Vector* best_x = nullptr);

// Singular values in descending order.
RealVector singular_values(const Matrix& M);

// Principal square root of a Hermitian PSD matrix. Eigenvalues in
// [-1e-10*|M|, 0) are clamped to zero; anything lower throws
// NotPositiveSemidefinite.
Matrix psd_sqrt(const Matrix& M);

// Magnitude floor used to regularise elementwise divisions: rel * median of
// entry magnitudes (falls back to the max magnitude when the median is zero).
double magnitude_floor(const Matrix& M, double rel = 1e-12);

// Elementwise 1/x with |x| clamped from below at `floor_abs` (phase kept;
// exact zeros are treated as +floor). Increments *clamp_count per clamped
// entry when given.
Matrix regularized_reciprocal(const Matrix& M, double floor_abs,
                              long* clamp_count = nullptr);

// Deterministic RNG: mt19937_64 plus a hand-rolled Box-Muller, so the stream
// does not depend on the standard library's normal_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();   // [0, 1)
  double gaussian();  // standard normal
  Complex complex_gaussian();  // re and im independent standard normals
  std::uint64_t integer() { return engine_(); }
  std::string serialize() const;
  static Rng deserialize(const std::string& text);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ucps
