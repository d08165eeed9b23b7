#include "ucps/observables.hpp"

#include <cmath>
#include <cstdio>

#include "ucps/tdvp.hpp"

namespace ucps {

double energy_density(const UcpsState& state, const SpectralEnvironment& env,
                      const BlockHamiltonian& H) {
  return block_energy(state, env, H) / H.n;
}

double entanglement_entropy(const RealVector& schmidt) {
  const double total = schmidt.squaredNorm();
  if (std::abs(total - 1.0) > 1e-8)
    throw InvalidArgument("entanglement_entropy: Schmidt weights must sum to 1");
  double s = 0.0;
  for (int i = 0; i < schmidt.size(); ++i) {
    const double p = schmidt(i) * schmidt(i);
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

double correlation_length(Complex lambda2, int n, Engine engine) {
  const double mag = std::abs(lambda2);
  if (mag >= 1.0 - 1e-12)
    throw DegenerateDominant(
        "correlation_length: |lambda2| within 1e-12 of the dominant value");
  if (mag == 0.0) return 0.0;
  const double units = (engine == Engine::ucps) ? static_cast<double>(n) : 1.0;
  return -units / std::log(mag);
}

double correlation_length(const SpectralEnvironment& env, int n) {
  if (env.dim() < 2)
    throw InvalidArgument("correlation_length: no subdominant eigenvalue");
  return correlation_length(env.lambda(1) / env.lambda(0), n, Engine::ucps);
}

double order_parameter(const UcpsState& state, const SpectralEnvironment& env,
                       const Matrix& op, int position) {
  if (position < 1 || position > state.n)
    throw InvalidArgument("order_parameter: position out of range");
  const Matrix O = block_one_site_op(op, state.n, position - 1);
  return expectation_one_block(state, env, O).real();
}

double order_parameter_average(const UcpsState& state,
                               const SpectralEnvironment& env,
                               const Matrix& op) {
  double sum = 0.0;
  for (int pos = 1; pos <= state.n; ++pos)
    sum += order_parameter(state, env, op, pos);
  return sum / state.n;
}

double rate_function(const UcpsState& psi0, const UcpsState& psit,
                     bool* saturated) {
  if (saturated) *saturated = false;
  if (psi0.n != psit.n || psi0.dim != psit.dim)
    throw InvalidArgument("rate_function: states have different shapes");
  const Matrix M = mixed_transfer(psit, psi0);
  // Eigenvalues only: near a dynamical crossing the two leading eigenvalues
  // swap and may nearly coincide, which is harmless for the magnitude but
  // would defeat eigenvector-based iteration.
  Eigen::ComplexEigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw Error("rate_function: eigenvalue computation failed");
  const double mag = es.eigenvalues().cwiseAbs().maxCoeff();
  if (mag <= 0.0) {
    if (saturated) *saturated = true;
    return kRateCap;
  }
  const double rate = -2.0 * std::log(mag) / psi0.n;
  if (rate > kRateCap) {
    if (saturated) *saturated = true;
    return kRateCap;
  }
  return rate;
}

std::string observable_csv_header() {
  return "t,energy,entropy,corr_length,order_param,rate_function";
}

std::string to_csv_row(const ObservableRecord& rec) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", rec.t,
                rec.energy, rec.entropy, rec.corr_length, rec.order_param,
                rec.rate_function);
  return buf;
}

}  // namespace ucps
