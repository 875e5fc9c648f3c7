#pragma once

// Deterministic double-bracket gradient flow dH/dt = -lambda [H, [H, G]],
// optionally with the unitary term -i [H, G]. RK4 integration with
// post-step Hermitization, plus the exact 2x2 solution used as an oracle.

#include <cmath>
#include <string>
#include <vector>

#include "isoflow/errors.hpp"
#include "isoflow/hermitian.hpp"

namespace isoflow {

enum class FlowVariant { pure_gradient, with_unitary };

struct FlowParams {
  double lambda = 1.0;
  double dt = 1e-3;
  double t_final = 1.0;
  FlowVariant variant = FlowVariant::pure_gradient;

  void validate() const {
    if (lambda <= 0.0) throw validation_error("FlowParams: lambda must be positive");
    if (dt <= 0.0 || t_final <= 0.0) throw validation_error("FlowParams: dt and t_final must be positive");
    if (dt > t_final) throw validation_error("FlowParams: dt must not exceed t_final");
  }
};

inline double alignment_norm(const HermitianMatrix& h, const HermitianMatrix& g) {
  return commutator(h, g).frobenius_norm();
}

namespace detail {

inline Cmat flow_rhs(const Cmat& h, const Cmat& g, double lambda, FlowVariant variant) {
  const Cmat c1 = commutator(h, g);
  Cmat rhs = cplx(-lambda) * commutator(h, c1);
  if (variant == FlowVariant::with_unitary) rhs += cplx(0.0, -1.0) * c1;
  return rhs;
}

inline void check_stability_guard(const HermitianMatrix& h, const HermitianMatrix& g,
                                  const FlowParams& p) {
  const double prod = p.dt * p.lambda * g.frobenius_norm() * h.frobenius_norm();
  if (prod > 0.1)
    throw guard_error("flow stability guard violated: dt*lambda*|G|*|H0| = " + std::to_string(prod) +
                      " exceeds 0.1");
}

}  // namespace detail

// One classical RK4 step; the result is re-Hermitized to kill roundoff drift.
inline HermitianMatrix flow_step(const HermitianMatrix& h, const HermitianMatrix& g,
                                 const FlowParams& p) {
  p.validate();
  h.mat().check_same_dim(g.mat());
  detail::check_stability_guard(h, g, p);
  if (!is_nondegenerate(h))
    throw guard_error("flow_step: degenerate H (spectral gap below 1e-9)");

  const Cmat& h0 = h.mat();
  const Cmat& gm = g.mat();
  const double dt = p.dt;
  const Cmat k1 = detail::flow_rhs(h0, gm, p.lambda, p.variant);
  const Cmat k2 = detail::flow_rhs(h0 + cplx(0.5 * dt) * k1, gm, p.lambda, p.variant);
  const Cmat k3 = detail::flow_rhs(h0 + cplx(0.5 * dt) * k2, gm, p.lambda, p.variant);
  const Cmat k4 = detail::flow_rhs(h0 + cplx(dt) * k3, gm, p.lambda, p.variant);
  Cmat out = h0 + cplx(dt / 6.0) * (k1 + cplx(2.0) * k2 + cplx(2.0) * k3 + k4);
  return HermitianMatrix::closest(out);
}

struct TrajectoryPoint {
  double t = 0.0;
  HermitianMatrix h;
};

struct FlowDiagnostics {
  bool unstable_fixed_point = false;  // stalled with tr(HG) above its orbit minimum
  double max_eigenvalue_drift = 0.0;
  double final_alignment = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;  // includes t = 0 and t = t_final
  FlowDiagnostics diagnostics;
};

namespace detail {

// Minimum of tr(HG) on the isospectral orbit: ascending spectrum of H paired
// with descending spectrum of G.
inline double orbit_min_trace(const HermitianMatrix& h, const HermitianMatrix& g) {
  auto eh = eigenvalues(h);
  auto eg = eigenvalues(g);
  double m = 0.0;
  const std::size_t n = eh.size();
  for (std::size_t i = 0; i < n; ++i) m += eh[i] * eg[n - 1 - i];
  return m;
}

}  // namespace detail

// Integrate the flow, sampling every `stride` steps. The energy tr(H_t G)
// must be non-increasing along the trajectory; an increase beyond 1e-12 per
// step aborts with diagnostics. (The commutator norm |[H,G]| itself is not
// monotone when the initial state sits on the G-side hemisphere, so the
// monotonicity monitor uses the energy.)
inline Trajectory integrate(const HermitianMatrix& h0, const HermitianMatrix& g,
                            const FlowParams& p, int stride = 1) {
  p.validate();
  h0.mat().check_same_dim(g.mat());
  detail::check_stability_guard(h0, g, p);
  if (stride < 1) throw validation_error("integrate: stride must be >= 1");
  if (!is_nondegenerate(h0))
    throw guard_error("integrate: degenerate H0 (spectral gap below 1e-9)");

  const long n_steps = static_cast<long>(std::llround(p.t_final / p.dt));
  const auto eig0 = eigenvalues(h0);

  Trajectory traj;
  traj.points.push_back({0.0, h0});

  HermitianMatrix h = h0;
  double energy = trace_product(h.mat(), g.mat());
  for (long k = 1; k <= n_steps; ++k) {
    const Cmat& hm = h.mat();
    const Cmat& gm = g.mat();
    const Cmat k1 = detail::flow_rhs(hm, gm, p.lambda, p.variant);
    const Cmat k2 = detail::flow_rhs(hm + cplx(0.5 * p.dt) * k1, gm, p.lambda, p.variant);
    const Cmat k3 = detail::flow_rhs(hm + cplx(0.5 * p.dt) * k2, gm, p.lambda, p.variant);
    const Cmat k4 = detail::flow_rhs(hm + cplx(p.dt) * k3, gm, p.lambda, p.variant);
    h = HermitianMatrix::closest(hm + cplx(p.dt / 6.0) *
                                          (k1 + cplx(2.0) * k2 + cplx(2.0) * k3 + k4));

    const double e_new = trace_product(h.mat(), g.mat());
    if (e_new > energy + 1e-12)
      throw guard_error("integrate: tr(HG) increased by " + std::to_string(e_new - energy) +
                        " at t = " + std::to_string(k * p.dt) + "; reduce dt");
    energy = e_new;

    const auto eig = eigenvalues(h);
    for (std::size_t i = 0; i < eig.size(); ++i)
      traj.diagnostics.max_eigenvalue_drift =
          std::max(traj.diagnostics.max_eigenvalue_drift, std::abs(eig[i] - eig0[i]));

    if (k % stride == 0 || k == n_steps) traj.points.push_back({k * p.dt, h});
  }

  traj.diagnostics.final_alignment = alignment_norm(h, g);
  const double grad_norm = double_bracket(h, g).frobenius_norm();
  if (grad_norm < 1e-14 && traj.diagnostics.final_alignment < 1e-14 &&
      energy > detail::orbit_min_trace(h, g) + 1e-9)
    traj.diagnostics.unstable_fixed_point = true;

  return traj;
}

// ---------------------------------------------------------------------------
// Exact 2x2 solution:
//   H_t = (1/2) [[u0 - nu tanh(w t - c0), nu sech(w t - c0) e^{+i phi0}],
//                [nu sech(w t - c0) e^{-i phi0}, u0 + nu tanh(w t - c0)]]
// with w = lambda nu mu and c0 = artanh(cos theta0). Trace and determinant
// are conserved; the t -> infinity limit is diag(u0 - nu, u0 + nu)/2.
// ---------------------------------------------------------------------------

struct Analytic2x2Solution {
  double u0 = 0.0;
  double nu = 1.0;     // >= 0
  double c0 = 0.0;     // artanh(cos theta0)
  double phi0 = 0.0;
  double omega = 1.0;  // lambda * nu * mu, > 0

  static Analytic2x2Solution from_initial(double u0, double nu, double theta0, double phi0,
                                          double lambda, double mu) {
    if (theta0 <= 0.0 || theta0 >= kPi)
      throw validation_error("Analytic2x2Solution: theta0 must lie in (0, pi)");
    if (nu < 0.0) throw validation_error("Analytic2x2Solution: nu must be nonnegative");
    const double omega = lambda * nu * mu;
    if (omega <= 0.0) throw validation_error("Analytic2x2Solution: omega = lambda*nu*mu must be positive");
    return {u0, nu, std::atanh(std::cos(theta0)), phi0, omega};
  }
};

inline HermitianMatrix analytic_2x2(const Analytic2x2Solution& s, double t) {
  if (t < 0.0) throw validation_error("analytic_2x2: t must be nonnegative");
  const double x = s.omega * t - s.c0;
  const double th = std::tanh(x);
  const double sh = 1.0 / std::cosh(x);
  Cmat m(2);
  m.at(0, 0) = 0.5 * (s.u0 - s.nu * th);
  m.at(1, 1) = 0.5 * (s.u0 + s.nu * th);
  m.at(0, 1) = 0.5 * s.nu * sh * std::polar(1.0, s.phi0);
  m.at(1, 0) = std::conj(m.at(0, 1));
  return HermitianMatrix(m);
}

}  // namespace isoflow
