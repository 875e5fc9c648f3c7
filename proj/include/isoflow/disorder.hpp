#pragma once

// Quantum statistical mechanics over the Hamiltonian ensemble: Gibbs
// expectations at bath inverse temperature beta, annealed averages (Gibbs
// state of the mean Hamiltonian) and quenched averages (ensemble average of
// per-Hamiltonian Gibbs expectations), plus the closed forms for
// G = (mu/2) sigma_z:
//
//   <G>_Q = (mu/2) tanh(beta nu / 2) (coth(lm/2) - 2/lm)
//   <G>_A = (mu/2) tanh[(beta nu / 2) (coth(lm/2) - 2/lm)],   lm = lambda mu.

#include <cmath>
#include <span>
#include <vector>

#include "isoflow/equilibrium.hpp"
#include "isoflow/errors.hpp"
#include "isoflow/hermitian.hpp"
#include "isoflow/rng.hpp"
#include "isoflow/thermalizer.hpp"

namespace isoflow {

struct ThermalParams {
  double beta = 1.0;  // bath inverse temperature, >= 0

  void validate() const {
    if (beta < 0.0) throw validation_error("ThermalParams: beta must be nonnegative");
  }
  double temperature() const { return 1.0 / beta; }
};

// tr(O e^{-beta H}) / tr(e^{-beta H}), eigenvalue-shifted so beta up to 1e6
// cannot overflow.
inline double gibbs_expectation(const HermitianMatrix& o, const HermitianMatrix& h, double beta) {
  o.mat().check_same_dim(h.mat());
  if (beta < 0.0) throw validation_error("gibbs_expectation: beta must be nonnegative");
  const int n = h.dim();
  if (beta == 0.0) return o.trace() / n;

  const Eigensystem es = eigensystem(h);
  const double e_min = es.values.front();
  double zsum = 0.0;
  double osum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double w = std::exp(-beta * (es.values[static_cast<std::size_t>(k)] - e_min));
    // <v_k| O |v_k>
    cplx diag = 0.0;
    for (int i = 0; i < n; ++i) {
      cplx row = 0.0;
      for (int j = 0; j < n; ++j) row += o(i, j) * es.vectors.at(j, k);
      diag += std::conj(es.vectors.at(i, k)) * row;
    }
    zsum += w;
    osum += w * diag.real();
  }
  return osum / zsum;
}

// Annealed average: Gibbs expectation in the ensemble-mean Hamiltonian.
inline double annealed_average(const HermitianMatrix& o, const CanonicalParams& p,
                               const ThermalParams& t) {
  p.validate();
  t.validate();
  return gibbs_expectation(o, mean_hamiltonian(p), t.beta);
}

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

namespace detail {

inline McEstimate mean_and_se(const std::vector<double>& vals) {
  const double n = static_cast<double>(vals.size());
  double sum = 0.0;
  for (double v : vals) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  const double var = vals.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace detail

// Quenched average by Monte Carlo over the exact equilibrium sampler.
inline McEstimate quenched_average_mc(const HermitianMatrix& o, const CanonicalParams& p,
                                      const ThermalParams& t, int n_samples, Rng& rng) {
  p.validate();
  t.validate();
  if (n_samples < 100) throw validation_error("quenched_average_mc: n_samples must be >= 100");
  std::vector<double> vals(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const double c = sample_cos_theta(p, rng);
    const double phi = rng.uniform01() * kTwoPi;
    const HermitianMatrix h = from_bloch(p.u0, p.nu, std::acos(c), phi);
    vals[static_cast<std::size_t>(i)] = gibbs_expectation(o, h, t.beta);
  }
  return detail::mean_and_se(vals);
}

// Same average evaluated on externally produced sphere states (e.g. SDE
// terminal states), for end-to-end integration checks.
inline McEstimate quenched_average_from_states(const HermitianMatrix& o,
                                               std::span<const SphereState> states, double u0,
                                               double nu, double beta) {
  if (states.size() < 100) throw validation_error("quenched_average_from_states: need >= 100 states");
  std::vector<double> vals(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const HermitianMatrix h = from_bloch(u0, nu, states[i].theta, states[i].phi);
    vals[i] = gibbs_expectation(o, h, beta);
  }
  return detail::mean_and_se(vals);
}

namespace detail {

inline double langevin_factor(const CanonicalParams& p) {
  // coth(lm/2) - 2/lm, in (0, 1); reuse the stabilized mean.
  return -mean_cos(p);
}

inline void require_traceless_reference(const CanonicalParams& p) {
  if (p.v != 0.0)
    throw validation_error("closed-form averages require v = 0 (traceless reference G)");
}

}  // namespace detail

// Closed-form quenched average of G = (mu/2) sigma_z.
inline double quenched_closed_G(const CanonicalParams& p, const ThermalParams& t) {
  p.validate();
  t.validate();
  detail::require_traceless_reference(p);
  return 0.5 * p.mu * std::tanh(0.5 * t.beta * p.nu) * detail::langevin_factor(p);
}

// Closed-form annealed average of G = (mu/2) sigma_z.
inline double annealed_closed_G(const CanonicalParams& p, const ThermalParams& t) {
  p.validate();
  t.validate();
  detail::require_traceless_reference(p);
  return 0.5 * p.mu * std::tanh(0.5 * t.beta * p.nu * detail::langevin_factor(p));
}

// Row of the quenched/annealed curve against bath temperature T = 1/beta.
struct DisorderCurvePoint {
  double temperature;
  double quenched_closed;
  double quenched_mc;
  double quenched_mc_se;
  double annealed;
};

inline std::vector<DisorderCurvePoint> disorder_curve(const CanonicalParams& p, int n_samples,
                                                      std::uint64_t seed, double t_min = 0.02,
                                                      double t_max = 5.0, int n_points = 200) {
  p.validate();
  detail::require_traceless_reference(p);
  if (n_points < 2) throw validation_error("disorder_curve: need at least 2 points");
  const HermitianMatrix g = from_bloch(p.v, p.mu, 0.0, 0.0);
  std::vector<DisorderCurvePoint> out;
  out.reserve(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double temp = t_min + (t_max - t_min) * i / (n_points - 1);
    const ThermalParams t{1.0 / temp};
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    const McEstimate mc = quenched_average_mc(g, p, t, n_samples, rng);
    out.push_back({temp, quenched_closed_G(p, t), mc.value, mc.std_error, annealed_closed_G(p, t)});
  }
  return out;
}

}  // namespace isoflow
