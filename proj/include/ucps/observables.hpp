// Physical quantities shared by both engines: energy density, entanglement
// entropy, correlation length (with the n-site unit conversion for block
// states), single-site order parameters inside blocks, and the return-rate
// function of quench dynamics.
#pragma once

#include <string>

#include "ucps/models.hpp"
#include "ucps/state.hpp"

namespace ucps {

// Second transfer eigenvalue too close to the dominant one for a correlation
// length to be defined.
struct DegenerateDominant : Error {
  using Error::Error;
};

enum class Engine { ucps, umps };

// Per-site energy of the block Hamiltonian; imaginary part must vanish.
double energy_density(const UcpsState& state, const SpectralEnvironment& env,
                      const BlockHamiltonian& H);

// Natural-log entropy of a Schmidt vector (requires sum of squares = 1
// within 1e-8; zero weights are skipped).
double entanglement_entropy(const RealVector& schmidt);

// mu = -n / log|lambda2| in fundamental lattice units for block states,
// -1 / log|lambda2| for one-site uniform MPS. |lambda2| within 1e-12 of 1
// throws DegenerateDominant; |lambda2| = 0 gives 0.
double correlation_length(Complex lambda2, int n, Engine engine);
// Convenience overload reading lambda2 from a block-state environment.
double correlation_length(const SpectralEnvironment& env, int n);

// <op> on one spin of the block (position is 1-based), and the average over
// all block positions. `op` is 2x2 in the fundamental spin space.
double order_parameter(const UcpsState& state, const SpectralEnvironment& env,
                       const Matrix& op, int position);
double order_parameter_average(const UcpsState& state,
                               const SpectralEnvironment& env,
                               const Matrix& op);

// Return rate per fundamental site between an initial and an evolved state:
// l = -(2/n) log |dominant eigenvalue of the mixed transfer matrix|.
// Capped at kRateCap (flag set) when the overlap is numerically zero.
inline constexpr double kRateCap = 50.0;
double rate_function(const UcpsState& psi0, const UcpsState& psit,
                     bool* saturated = nullptr);

struct ObservableRecord {
  double t = 0.0;
  double energy = 0.0;
  double entropy = 0.0;
  double corr_length = 0.0;
  double order_param = 0.0;
  double rate_function = 0.0;
};

// Fixed column order: t, energy, entropy, corr_length, order_param,
// rate_function. Values are printed with %.17g so output is reproducible
// bit for bit.
std::string observable_csv_header();
std::string to_csv_row(const ObservableRecord& rec);

}  // namespace ucps
