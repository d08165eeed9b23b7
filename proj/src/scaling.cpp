#include "ucps/scaling.hpp"

#include <cmath>

namespace ucps {

ScalingFit linear_fit(const std::vector<double>& x,
                      const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n != static_cast<int>(y.size()))
    throw InvalidArgument("linear_fit: length mismatch");
  if (n < 3) throw InvalidArgument("linear_fit: need at least 3 points");
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw InvalidArgument("linear_fit: non-finite input");
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(x[i]));
  if (sxx <= 1e-24 * std::max(1.0, scale * scale))
    throw InvalidArgument("linear_fit: x is (numerically) constant");

  ScalingFit fit;
  fit.npoints = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.residuals.resize(n);
  double ssr = 0.0;
  for (int i = 0; i < n; ++i) {
    fit.residuals(i) = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += fit.residuals(i) * fit.residuals(i);
  }
  fit.stderr_slope = std::sqrt(ssr / (n - 2) / sxx);
  return fit;
}

ScalingFit kappa_tilde_estimate(const std::vector<int>& overlaps,
                                const std::vector<double>& mus) {
  if (overlaps.size() != mus.size())
    throw InvalidArgument("kappa_tilde_estimate: length mismatch");
  std::vector<double> lx, ly;
  for (size_t i = 0; i < overlaps.size(); ++i) {
    if (overlaps[i] < 1 || mus[i] <= 0.0)
      throw InvalidArgument("kappa_tilde_estimate: need n >= 1 and mu > 0");
    lx.push_back(std::log(static_cast<double>(overlaps[i])));
    ly.push_back(std::log(mus[i]));
  }
  return linear_fit(lx, ly);
}

double central_charge_estimate(const std::vector<double>& entropies,
                               const std::vector<double>& mus,
                               const std::vector<int>& overlaps,
                               bool extrapolate) {
  const size_t n = entropies.size();
  if (mus.size() != n || overlaps.size() != n)
    throw InvalidArgument("central_charge_estimate: length mismatch");
  std::vector<double> logmu;
  for (double mu : mus) {
    if (mu <= 0.0)
      throw InvalidArgument("central_charge_estimate: mu must be positive");
    logmu.push_back(std::log(mu));
  }
  if (!extrapolate) return 6.0 * linear_fit(logmu, entropies).slope;

  if (n < 4)
    throw InvalidArgument(
        "central_charge_estimate: extrapolation needs at least 4 points");
  std::vector<double> inv_n, local;
  for (size_t i = 0; i + 1 < n; ++i) {
    const double dl = logmu[i + 1] - logmu[i];
    if (std::abs(dl) < 1e-14)
      throw InvalidArgument("central_charge_estimate: repeated mu value");
    local.push_back((entropies[i + 1] - entropies[i]) / dl);
    inv_n.push_back(2.0 / (overlaps[i] + overlaps[i + 1]));
  }
  return 6.0 * linear_fit(inv_n, local).intercept;
}

double kappa_from_c(double c) {
  if (c <= 0.0) throw InvalidArgument("kappa_from_c: c must be positive");
  return 6.0 / (c * (std::sqrt(12.0 / c) + 1.0));
}

}  // namespace ucps
