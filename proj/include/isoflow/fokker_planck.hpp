#pragma once

// Axisymmetric Fokker-Planck cross-check on the sphere, solved for the
// coordinate-measure density q(theta, t) (so sum q dtheta = 1):
//
//   dq/dt = -d/dtheta [ (omega sin th + D cot th) q ] + D d^2q/dtheta^2
//
// in flux form with zero-flux boundaries; the stationary profile is
// q*(theta) ~ sin(theta) exp(-(omega/D) cos theta). The operator printed as
// the angle-space equation, -omega (cos th + sin th d/dth) + D d^2/dth^2,
// annihilates the same stationary density but does not conserve coordinate
// probability; it is kept only for comparison.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "isoflow/errors.hpp"
#include "isoflow/hermitian.hpp"

namespace isoflow {

struct FpGrid {
  int n_theta = 256;
  double dt_pde = 0.0;  // 0 selects the CFL-limited default for the given D

  void validate() const {
    if (n_theta < 64) throw validation_error("FpGrid: n_theta must be >= 64");
  }

  double dtheta() const { return kPi / n_theta; }
  double center(int i) const { return (i + 0.5) * dtheta(); }

  double cfl_limit(double D) const { return 0.4 * dtheta() * dtheta() / (2.0 * D); }

  double step_size(double D) const {
    const double lim = cfl_limit(D);
    if (dt_pde <= 0.0) return lim;
    if (dt_pde > lim)
      throw guard_error("FpGrid: dt_pde = " + std::to_string(dt_pde) + " violates CFL limit " +
                        std::to_string(lim));
    return dt_pde;
  }
};

enum class FpForm { conservative, printed };

// Discretized stationary profile, normalized to sum q dtheta = 1.
inline std::vector<double> stationary_profile(const FpGrid& grid, double omega, double D) {
  grid.validate();
  std::vector<double> q(static_cast<std::size_t>(grid.n_theta));
  double mass = 0.0;
  for (int i = 0; i < grid.n_theta; ++i) {
    const double th = grid.center(i);
    q[static_cast<std::size_t>(i)] = std::sin(th) * std::exp(-(omega / D) * std::cos(th));
    mass += q[static_cast<std::size_t>(i)];
  }
  const double inv = 1.0 / (mass * grid.dtheta());
  for (auto& v : q) v *= inv;
  return q;
}

// One explicit flux-form finite-volume step (conservative form).
inline void fp_step(std::vector<double>& q, const FpGrid& grid, double omega, double D,
                    double dt_override = 0.0) {
  grid.validate();
  const int n = grid.n_theta;
  if (static_cast<int>(q.size()) != n) throw validation_error("fp_step: q size != n_theta");
  const double dth = grid.dtheta();
  double dt = dt_override > 0.0 ? dt_override : grid.step_size(D);
  if (dt > grid.cfl_limit(D))
    throw guard_error("fp_step: dt violates CFL limit " + std::to_string(grid.cfl_limit(D)));

  // Interior face fluxes J_{i+1/2}; boundary fluxes are zero.
  static thread_local std::vector<double> flux;
  flux.assign(static_cast<std::size_t>(n - 1), 0.0);
  for (int f = 0; f < n - 1; ++f) {
    const double th = (f + 1) * dth;
    const double drift = omega * std::sin(th) + D * std::cos(th) / std::sin(th);
    const double q_face = 0.5 * (q[static_cast<std::size_t>(f)] + q[static_cast<std::size_t>(f + 1)]);
    flux[static_cast<std::size_t>(f)] =
        drift * q_face - D * (q[static_cast<std::size_t>(f + 1)] - q[static_cast<std::size_t>(f)]) / dth;
  }
  const double r = dt / dth;
  double j_left = 0.0;
  for (int i = 0; i < n; ++i) {
    const double j_right = (i < n - 1) ? flux[static_cast<std::size_t>(i)] : 0.0;
    q[static_cast<std::size_t>(i)] -= r * (j_right - j_left);
    j_left = j_right;
  }
}

// Apply either generator to a sampled profile and return dq/dt (central
// differences for the printed form). Used to verify that both operators
// annihilate their stationary densities.
inline std::vector<double> apply_generator(const std::vector<double>& q, const FpGrid& grid,
                                           double omega, double D, FpForm form) {
  grid.validate();
  const int n = grid.n_theta;
  if (static_cast<int>(q.size()) != n) throw validation_error("apply_generator: size mismatch");
  const double dth = grid.dtheta();
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);

  if (form == FpForm::conservative) {
    std::vector<double> tmp = q;
    const double dt = grid.cfl_limit(D);
    fp_step(tmp, grid, omega, D, dt);
    for (int i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] =
          (tmp[static_cast<std::size_t>(i)] - q[static_cast<std::size_t>(i)]) / dt;
    return out;
  }
  // printed angle-space operator on a density w.r.t. the sphere volume
  for (int i = 1; i < n - 1; ++i) {
    const double th = grid.center(i);
    const double d1 = (q[static_cast<std::size_t>(i + 1)] - q[static_cast<std::size_t>(i - 1)]) / (2.0 * dth);
    const double d2 = (q[static_cast<std::size_t>(i + 1)] - 2.0 * q[static_cast<std::size_t>(i)] +
                       q[static_cast<std::size_t>(i - 1)]) / (dth * dth);
    out[static_cast<std::size_t>(i)] =
        -omega * (std::cos(th) * q[static_cast<std::size_t>(i)] + std::sin(th) * d1) + D * d2;
  }
  return out;
}

struct FpResult {
  std::vector<double> q;
  double t_reached = 0.0;
  long steps = 0;
  std::vector<std::pair<double, double>> residual_history;  // (t, |dq|_1 / dt)
};

// March the conservative solver until the L1 rate-of-change drops below tol.
inline FpResult evolve_to_stationarity(std::vector<double> q0, const FpGrid& grid, double omega,
                                       double D, double tol = 1e-10, long max_steps = 50'000'000) {
  grid.validate();
  const int n = grid.n_theta;
  if (static_cast<int>(q0.size()) != n) throw validation_error("evolve_to_stationarity: size mismatch");
  const double dt = grid.step_size(D);
  const double dth = grid.dtheta();

  FpResult res;
  res.q = std::move(q0);
  std::vector<double> prev;
  const long history_stride = 1000;
  for (long k = 1; k <= max_steps; ++k) {
    prev = res.q;
    fp_step(res.q, grid, omega, D, dt);
    double change = 0.0;
    for (int i = 0; i < n; ++i)
      change += std::abs(res.q[static_cast<std::size_t>(i)] - prev[static_cast<std::size_t>(i)]) * dth;
    const double rate = change / dt;
    if (k % history_stride == 0 || rate < tol) res.residual_history.push_back({k * dt, rate});
    if (rate < tol) {
      res.t_reached = k * dt;
      res.steps = k;
      return res;
    }
  }
  std::string msg = "evolve_to_stationarity: no convergence after " + std::to_string(max_steps) +
                    " steps; last residuals:";
  const std::size_t tail = std::min<std::size_t>(res.residual_history.size(), 5);
  for (std::size_t i = res.residual_history.size() - tail; i < res.residual_history.size(); ++i)
    msg += " " + std::to_string(res.residual_history[i].second);
  throw guard_error(msg);
}

inline double profile_mean_cos(const std::vector<double>& q, const FpGrid& grid) {
  double m = 0.0;
  for (int i = 0; i < grid.n_theta; ++i)
    m += std::cos(grid.center(i)) * q[static_cast<std::size_t>(i)];
  return m * grid.dtheta();
}

inline double profile_mass(const std::vector<double>& q, const FpGrid& grid) {
  double m = 0.0;
  for (double v : q) m += v;
  return m * grid.dtheta();
}

// Integrate a profile into 50 uniform cos(theta) bins (for SDE/PDE
// comparisons against ensemble histograms).
inline std::vector<double> profile_cos_histogram(const std::vector<double>& q, const FpGrid& grid) {
  std::vector<double> bins(50, 0.0);
  for (int i = 0; i < grid.n_theta; ++i) {
    const double c = std::cos(grid.center(i));
    int b = static_cast<int>((c + 1.0) * 25.0);
    if (b < 0) b = 0;
    if (b > 49) b = 49;
    bins[static_cast<std::size_t>(b)] += q[static_cast<std::size_t>(i)] * grid.dtheta();
  }
  return bins;
}

}  // namespace isoflow
