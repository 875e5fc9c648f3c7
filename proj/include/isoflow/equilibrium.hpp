#pragma once

// Closed-form canonical equilibrium over 2x2 Hamiltonians on the isospectral
// sphere: density rho(theta) = [lm / (2 pi sinh(lm/2))] exp(-(lm/2) cos theta)
// with lm = lambda*mu, normalized against dV = (1/4) sin(theta) dtheta dphi.

#include <cmath>
#include <vector>

#include "isoflow/errors.hpp"
#include "isoflow/hermitian.hpp"
#include "isoflow/rng.hpp"

namespace isoflow {

struct CanonicalParams {
  double lambda = 1.0;  // inverse Hamiltonian temperature, > 0
  double mu = 2.0;      // reference gap, > 0
  double nu = 1.0;      // system gap, >= 0
  double u0 = 0.0;      // system trace part
  double v = 0.0;       // reference trace part

  void validate() const {
    if (lambda <= 0.0 || mu <= 0.0) throw validation_error("CanonicalParams: lambda and mu must be positive");
    if (nu < 0.0) throw validation_error("CanonicalParams: nu must be nonnegative");
  }

  double coupling() const { return lambda * mu; }         // lm
  double exponent_scale() const { return 0.5 * lambda * mu; }  // a = lm/2
};

// Equilibrium density at polar angle theta (phi-independent).
inline double density(double theta, const CanonicalParams& p) {
  p.validate();
  if (theta < 0.0 || theta > kPi) throw validation_error("density: theta outside [0, pi]");
  const double lm = p.coupling();
  double norm;
  if (lm < 1e-6) {
    // sinh(x)/x -> 1; avoids 0/0 at vanishing coupling
    const double x = 0.5 * lm;
    norm = 1.0 / (kPi * (1.0 + x * x / 6.0));
  } else {
    norm = lm / (kTwoPi * std::sinh(0.5 * lm));
  }
  return norm * std::exp(-0.5 * lm * std::cos(theta));
}

// Stabilization thresholds for the exact sampler and the closed-form mean.
// Above kLargeExponent the inverse CDF switches to its exponential-tail
// form; below kSmallExponent the mean uses its odd series. Both keep the
// double-precision relative error under 1e-12.
inline constexpr double kLargeExponent = 30.0;
inline constexpr double kSmallExponent = 1e-6;

// Exact inverse-CDF draw of c = cos(theta) from density prop. to e^{-a c}
// on [-1, 1], a = lambda*mu/2.
inline double sample_cos_theta(const CanonicalParams& p, Rng& rng) {
  p.validate();
  const double a = p.exponent_scale();
  const double u = rng.uniform01();
  double c;
  if (a < kSmallExponent) {
    c = 2.0 * u - 1.0;  // uniform limit
  } else if (a > kLargeExponent) {
    c = -1.0 - std::log1p(-u) / a;  // exponential tail at c = -1
  } else {
    c = -1.0 - std::log1p(-u * (-std::expm1(-2.0 * a))) / a;
  }
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

// Below this cut the direct 1/a - coth(a) cancels catastrophically; the
// three-term odd series keeps the relative error under 1e-12 on both sides.
inline constexpr double kMeanCosSeriesCut = 0.03;

// <cos theta> = 2/(lambda mu) - coth(lambda mu / 2).
inline double mean_cos(const CanonicalParams& p) {
  p.validate();
  const double a = p.exponent_scale();
  if (a < kMeanCosSeriesCut) {
    const double a2 = a * a;
    return a * (-1.0 / 3.0 + a2 * (1.0 / 45.0 - a2 * (2.0 / 945.0)));
  }
  return 1.0 / a - 1.0 / std::tanh(a);
}

// Equilibrium mean Hamiltonian: diag((u0 + nu <cos>)/2, (u0 - nu <cos>)/2).
inline HermitianMatrix mean_hamiltonian(const CanonicalParams& p) {
  const double c = mean_cos(p);
  Cmat m(2);
  m.at(0, 0) = 0.5 * (p.u0 + p.nu * c);
  m.at(1, 1) = 0.5 * (p.u0 - p.nu * c);
  return HermitianMatrix(m);
}

// Data for the mean-alignment curve: <cos theta> against tau = 1/lambda on a
// log-spaced grid.
struct MeanCosPoint {
  double tau;
  double mean_cos_theta;
};

inline std::vector<MeanCosPoint> mean_cos_curve(double mu, double tau_min = 1e-2,
                                                double tau_max = 1e2, int n_points = 200) {
  if (mu <= 0.0) throw validation_error("mean_cos_curve: mu must be positive");
  if (tau_min <= 0.0 || tau_max <= tau_min) throw validation_error("mean_cos_curve: bad tau range");
  if (n_points < 2) throw validation_error("mean_cos_curve: need at least 2 points");
  std::vector<MeanCosPoint> out;
  out.reserve(static_cast<std::size_t>(n_points));
  const double lr = std::log(tau_max / tau_min);
  for (int i = 0; i < n_points; ++i) {
    const double tau = tau_min * std::exp(lr * i / (n_points - 1));
    CanonicalParams p;
    p.lambda = 1.0 / tau;
    p.mu = mu;
    out.push_back({tau, mean_cos(p)});
  }
  return out;
}

}  // namespace isoflow
