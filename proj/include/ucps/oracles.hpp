// Independent reference solutions: free-fermion ground-state energies for the
// transverse-field Ising and XY chains, the exact post-quench return rate
// with its critical times, Lanczos diagonalisation on small rings, and the
// Bethe-ansatz Heisenberg constant.
#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ucps/models.hpp"

namespace ucps {

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int order, RealVector& nodes, RealVector& weights);

// Single-panel Gauss-Legendre quadrature of f on [a, b].
double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int order);

// Adaptive bisection built on Gauss-Legendre panels: a panel is accepted when
// halving it changes the value by less than the tolerance, so integrable
// singularities and kinks get refined automatically.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol = 1e-13, int order = 64,
                          int max_depth = 32);

// e0(h) = -(1/2pi) Int_0^pi eps_k dk, eps_k = 2 sqrt(1 + h^2 - 2 h cos k).
double ising_ground_energy(double h, int order = 512);

// eps_k = 2 sqrt((h - cos k)^2 + gamma^2 sin^2 k); gamma = 1 reduces to the
// Ising value (the two models differ by a spin rotation).
double xy_ground_energy(double h, double gamma, int order = 512);

// Exact return rate after a transverse-field quench h0 -> h1:
// l(t) = -(1/pi) Int_0^pi log| cos^2 phi_k + sin^2 phi_k e^{-2 i eps_k(h1) t} |
// with phi_k half the Bogoliubov-angle difference between the two fields.
double ising_quench_rate(double h0, double h1, double t, int order = 512);

// Times of the rate-function kinks, t*_m = (pi/eps_{k*}(h1)) (m + 1/2) with
// cos k* = (1 + h0 h1)/(h0 + h1); empty when |cos k*| > 1 (no crossing).
std::vector<double> critical_times(double h0, double h1, int count = 6);

// 1 - 4 ln 2 per site (Pauli-matrix convention, J = 1).
double heisenberg_ground_energy();

struct QuenchOracle {
  double h0 = 0.0, h1 = 0.0;
  int order = 512;  // quadrature order, at least 256
  QuenchOracle(double h0, double h1, int order = 512);
  double rate(double t) const;
  std::vector<double> times(int count = 6) const;
};

// Ground state of the local Hamiltonian on a ring (or open chain) of
// n_sites <= 14 spins by Lanczos with full reorthogonalisation. Returns the
// energy per site and the ground vector in the bit basis (site s = bit s,
// bit value 0 = up).
std::pair<double, Vector> exact_diag_ground(const std::vector<LocalTerm>& terms,
                                            int n_sites, bool periodic = true);

}  // namespace ucps
