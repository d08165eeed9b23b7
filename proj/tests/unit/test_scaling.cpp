#include "ucps/scaling.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"

using namespace ucps;

TEST_CASE("linear_fit: exact line, noise, and rejection paths") {
  std::vector<double> x, y;
  for (int i = 0; i < 6; ++i) {
    x.push_back(0.5 * i);
    y.push_back(2.0 * x.back() + 1.0);
  }
  const ScalingFit fit = linear_fit(x, y);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fit.stderr_slope < 1e-12);
  CHECK(fit.npoints == 6);
  REQUIRE(fit.residuals.size() == 6);
  CHECK(fit.residuals.cwiseAbs().maxCoeff() < 1e-14);

  std::vector<double> yn = y;
  for (size_t i = 0; i < yn.size(); ++i)
    yn[i] += 1e-3 * ((i % 2 == 0) ? 1.0 : -1.0);
  const ScalingFit noisy = linear_fit(x, yn);
  CHECK(std::abs(noisy.slope - 2.0) < 5e-3);
  CHECK(noisy.stderr_slope > 0.0);

  CHECK_THROWS_AS(linear_fit({1.0, 2.0}, {1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(linear_fit({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}),
                  InvalidArgument);
  CHECK_THROWS_AS(linear_fit({1.0, 2.0, 3.0}, {1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(linear_fit({1.0, 2.0, std::nan("")}, {1.0, 2.0, 3.0}),
                  InvalidArgument);
}

TEST_CASE("kappa_tilde_estimate recovers power-law exponents") {
  std::vector<int> ns = {2, 3, 4, 5, 6, 7, 8};
  std::vector<double> mu1, mu2;
  for (int n : ns) {
    mu1.push_back(0.7 * n);
    mu2.push_back(1.3 * n * n);
  }
  CHECK(kappa_tilde_estimate(ns, mu1).slope ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kappa_tilde_estimate(ns, mu2).slope ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(kappa_tilde_estimate({0, 2, 3}, {1.0, 2.0, 3.0}),
                  InvalidArgument);
  CHECK_THROWS_AS(kappa_tilde_estimate({1, 2, 3}, {1.0, -2.0, 3.0}),
                  InvalidArgument);
}

TEST_CASE("central_charge_estimate: pure logarithmic growth") {
  std::vector<int> ns = {2, 3, 4, 5, 6};
  std::vector<double> mus, entropies;
  for (int n : ns) {
    mus.push_back(1.5 * std::pow(n, 1.3));
    entropies.push_back((0.5 / 6.0) * std::log(mus.back()) + 0.3);
  }
  CHECK(central_charge_estimate(entropies, mus, ns, false) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(central_charge_estimate(entropies, mus, ns, true) ==
        doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("central_charge_estimate: 1/n drift removed by extrapolation") {
  // Local slopes built to be (c/6)(1 + a/n_mid): the plain global fit is
  // biased, the midpoint extrapolation recovers c exactly.
  const double c = 0.5, a = 0.8;
  std::vector<int> ns = {2, 3, 4, 5, 6, 7, 8};
  std::vector<double> mus, entropies;
  for (int n : ns) mus.push_back(static_cast<double>(n));
  entropies.push_back(0.1);
  for (size_t i = 0; i + 1 < ns.size(); ++i) {
    const double n_mid = 0.5 * (ns[i] + ns[i + 1]);
    const double slope = (c / 6.0) * (1.0 + a / n_mid);
    entropies.push_back(entropies.back() +
                        slope * (std::log(mus[i + 1]) - std::log(mus[i])));
  }
  const double c_ex = central_charge_estimate(entropies, mus, ns, true);
  CHECK(c_ex == doctest::Approx(c).epsilon(1e-10));
  const double c_global = central_charge_estimate(entropies, mus, ns, false);
  CHECK(std::abs(c_global - c) > 0.01);  // the bias the extrapolation removes

  std::vector<double> logmu;
  for (double mu : mus) logmu.push_back(std::log(mu));
  CHECK(c_global ==
        doctest::Approx(6.0 * linear_fit(logmu, entropies).slope)
            .epsilon(1e-14));
}

TEST_CASE("central_charge_estimate: argument validation") {
  CHECK_THROWS_AS(central_charge_estimate({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0},
                                          {2, 3, 4}, true),
                  InvalidArgument);  // extrapolation needs >= 4 points
  CHECK_THROWS_AS(central_charge_estimate({1.0, 2.0}, {1.0, 2.0, 3.0},
                                          {2, 3, 4}, false),
                  InvalidArgument);
  CHECK_THROWS_AS(central_charge_estimate({1.0, 2.0, 3.0, 4.0},
                                          {1.0, 2.0, 2.0, 3.0}, {2, 3, 4, 5},
                                          true),
                  InvalidArgument);  // repeated mu
  CHECK_THROWS_AS(central_charge_estimate({1.0, 2.0, 3.0}, {1.0, -2.0, 3.0},
                                          {2, 3, 4}, false),
                  InvalidArgument);
}

TEST_CASE("kappa_from_c: closed-form values") {
  CHECK(kappa_from_c(12.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(kappa_from_c(0.5) ==
        doctest::Approx(6.0 / (0.5 * (std::sqrt(24.0) + 1.0)))
            .epsilon(1e-15));
  CHECK(kappa_from_c(0.5) == doctest::Approx(2.0343).epsilon(1e-4));
  CHECK(kappa_from_c(1.0) == doctest::Approx(1.3441).epsilon(1e-4));
  CHECK_THROWS_AS(kappa_from_c(0.0), InvalidArgument);
  CHECK_THROWS_AS(kappa_from_c(-1.0), InvalidArgument);
}
