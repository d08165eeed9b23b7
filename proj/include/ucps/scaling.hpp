// Finite-entanglement-scaling fits: correlation-length growth exponent from
// log mu vs log n, central charge from S vs log mu with an optional 1/n
// extrapolation of local slopes, and the reference kappa(c) formula.
#pragma once

#include <vector>

#include "ucps/linalg.hpp"

namespace ucps {

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  int npoints = 0;
  RealVector residuals;
};

// Ordinary least squares with the standard error of the slope. Requires at
// least 3 points and non-constant x.
ScalingFit linear_fit(const std::vector<double>& x,
                      const std::vector<double>& y);

// Slope of log mu against log n; the slope is the growth exponent.
ScalingFit kappa_tilde_estimate(const std::vector<int>& overlaps,
                                const std::vector<double>& mus);

// Central charge from S = (c/6) log mu + const. Without extrapolation this is
// 6x the global fitted slope. With extrapolation, local slopes from
// consecutive point pairs are fitted against 1/n (n taken at the pair
// midpoint) and 6x the intercept is returned; needs >= 4 points.
double central_charge_estimate(const std::vector<double>& entropies,
                               const std::vector<double>& mus,
                               const std::vector<int>& overlaps,
                               bool extrapolate);

// kappa = 6 / (c (sqrt(12/c) + 1)), the uniform-MPS reference exponent.
double kappa_from_c(double c);

}  // namespace ucps
