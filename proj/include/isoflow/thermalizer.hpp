#pragma once

// Stochastic isospectral flow. Three interchangeable integrators:
//
//   angle_em            Euler-Maruyama in (theta, phi). The angle SDE is
//                       stated in covariant Ito differentials, so the raw
//                       coordinate drift carries the Christoffel correction
//                       D*cot(theta) on top of omega*sin(theta).
//   z_em                pole-free scalar scheme in z = cos(theta):
//                       dz = [-omega(1-z^2) - 2Dz] dt + sqrt(2D(1-z^2)) dW.
//   matrix_conjugation  H' = e^{-Xi} H e^{Xi} with anti-Hermitian
//                       Xi = -lambda [H,G] dt + dOmega; exactly isospectral.
//
// All three share the stationary law with exponent -(omega/D) cos(theta).

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "isoflow/errors.hpp"
#include "isoflow/hermitian.hpp"
#include "isoflow/rng.hpp"

namespace isoflow {

struct SphereState {
  double theta = 0.0;  // [0, pi]
  double phi = 0.0;    // [0, 2 pi)
};

enum class NoiseConvention { section6, canonical };

// Diffusion normalization. section6 ties the Fokker-Planck theta-diffusion
// coefficient to the spectral gap (D = 2 nu), which makes the stationary
// exponent -(lambda mu / 2) cos(theta); canonical fixes D = 2 so the
// stationary law is exp(-lambda tr(HG)) on the orbit.
struct NoiseConfig {
  double diffusion_D = 2.0;
  NoiseConvention convention = NoiseConvention::section6;
  std::uint64_t master_seed = 0;

  static NoiseConfig section6(double nu, std::uint64_t seed) {
    if (nu <= 0.0) throw validation_error("NoiseConfig::section6: nu must be positive");
    return {2.0 * nu, NoiseConvention::section6, seed};
  }
  static NoiseConfig canonical(std::uint64_t seed) {
    return {2.0, NoiseConvention::canonical, seed};
  }

  // Per-generator noise amplitude of the matrix scheme; s^2 = D/2 matches
  // the tangential diffusion h^{theta theta} = 2D on the Bloch sphere.
  double noise_scale() const { return std::sqrt(0.5 * diffusion_D); }

  void validate() const {
    if (diffusion_D <= 0.0) throw validation_error("NoiseConfig: diffusion_D must be positive");
  }
};

enum class Scheme { angle_em, z_em, matrix_conjugation };

struct EnsembleSpec {
  int n_paths = 1;
  double dt = 1e-3;
  double t_final = 1.0;
  Scheme scheme = Scheme::angle_em;
  int record_stride = 1;          // used when record_trajectories is set
  bool record_trajectories = false;
  int n_threads = 0;              // 0 = hardware concurrency

  void validate(double omega, double diffusion_D) const {
    if (n_paths < 1) throw validation_error("EnsembleSpec: n_paths must be >= 1");
    if (dt <= 0.0 || t_final <= 0.0) throw validation_error("EnsembleSpec: dt, t_final must be positive");
    if (record_stride < 1) throw validation_error("EnsembleSpec: record_stride must be >= 1");
    const double rate = std::max(std::abs(omega), diffusion_D);
    if (rate > 0.0 && dt > 0.01 / rate)
      throw guard_error("EnsembleSpec: dt = " + std::to_string(dt) + " exceeds guard 0.01/max(omega, D) = " +
                        std::to_string(0.01 / rate));
  }
};

// Coordinate-level theta drift: omega sin(theta) + D cot(theta).
inline double drift_theta(double theta, double omega, double D) {
  if (theta <= 0.0 || theta >= kPi)
    throw validation_error("drift_theta: theta at a pole; use the z scheme or reflection");
  return omega * std::sin(theta) + D * std::cos(theta) / std::sin(theta);
}

namespace detail {

inline double reflect_theta(double theta) {
  while (theta < 0.0 || theta > kPi) {
    if (theta < 0.0) theta = -theta;
    if (theta > kPi) theta = kTwoPi - theta;
  }
  // Exact pole hits make the next cot(theta) undefined; nudge inward.
  if (theta == 0.0) theta = std::nextafter(0.0, 1.0e300);
  if (theta == kPi) theta = std::nextafter(kPi, 0.0);
  return theta;
}

}  // namespace detail

// One Euler-Maruyama step of the two-angle SDE; dW1, dW2 are independent
// N(0, dt) increments. Theta volatility sqrt(D)(dW1+dW2), phi volatility
// -(sqrt(D)/sin theta)(dW1-dW2); reflection at the poles, phi wrapped.
inline SphereState step_angle(const SphereState& s, double omega, double D, double dt,
                              double dW1, double dW2) {
  const double amp = std::sqrt(D);
  double theta = s.theta + drift_theta(s.theta, omega, D) * dt + amp * (dW1 + dW2);
  double phi = s.phi - amp / std::sin(s.theta) * (dW1 - dW2);
  (void)dt;
  return {detail::reflect_theta(theta), wrap_angle_2pi(phi)};
}

// One Euler-Maruyama step of the pole-free z = cos(theta) scheme.
inline double step_z(double z, double omega, double D, double dt, double dW) {
  if (std::abs(z) > 1.0) throw validation_error("step_z: |z| must be <= 1");
  const double one_m = std::max(0.0, 1.0 - z * z);
  double out = z + (-omega * one_m - 2.0 * D * z) * dt + std::sqrt(2.0 * D * one_m) * dW;
  if (out > 1.0) out = 1.0;
  if (out < -1.0) out = -1.0;
  return out;
}

namespace detail {

// Traceless Hermitian generator basis with tr(Ta Tb) = 2 delta_ab
// (Pauli for N = 2, Gell-Mann for N = 3).
inline std::vector<Cmat> generator_basis(int n) {
  std::vector<Cmat> basis;
  basis.reserve(static_cast<std::size_t>(n * n - 1));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Cmat sym(n);
      sym.at(i, j) = 1.0;
      sym.at(j, i) = 1.0;
      basis.push_back(sym);
      Cmat asym(n);
      asym.at(i, j) = cplx(0.0, -1.0);
      asym.at(j, i) = cplx(0.0, 1.0);
      basis.push_back(asym);
    }
  for (int k = 1; k < n; ++k) {
    Cmat d(n);
    const double norm = std::sqrt(2.0 / (k * (k + 1.0)));
    for (int i = 0; i < k; ++i) d.at(i, i) = norm;
    d.at(k, k) = -k * norm;
    basis.push_back(d);
  }
  return basis;
}

// U = exp(i M) for Hermitian M; exactly unitary up to roundoff.
inline Cmat exp_i_hermitian(const Cmat& m) {
  if (m.n == 2 && std::abs(m.trace()) < 1e-300) {
    // traceless 2x2: e^{i sigma.v} = cos|v| I + i sin|v| sigma.v/|v|
    const double vx = m.at(0, 1).real();
    const double vy = -m.at(0, 1).imag();
    const double vz = m.at(0, 0).real();
    const double r = std::sqrt(vx * vx + vy * vy + vz * vz);
    if (r == 0.0) return Cmat::identity(2);
    const double c = std::cos(r);
    const cplx is = cplx(0.0, std::sin(r) / r);
    Cmat u(2);
    u.at(0, 0) = c + is * vz;
    u.at(1, 1) = c - is * vz;
    u.at(0, 1) = is * cplx(vx, -vy);
    u.at(1, 0) = is * cplx(vx, vy);
    return u;
  }
  const Eigensystem es = eigensystem(HermitianMatrix::closest(m));
  Cmat u(m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) {
      cplx sum = 0.0;
      for (int k = 0; k < m.n; ++k)
        sum += es.vectors.at(i, k) * std::polar(1.0, es.values[static_cast<std::size_t>(k)]) *
               std::conj(es.vectors.at(j, k));
      u.at(i, j) = sum;
    }
  return u;
}

}  // namespace detail

// One conjugation step H' = e^{-Xi} H e^{Xi}, Xi = -lambda [H,G] dt + dOmega,
// where dOmega = i sum_a dm_a T_a and dW holds the N^2-1 increments dm_a
// (standard deviation noise_scale * sqrt(dt) each). Spectrum-preserving by
// construction.
inline HermitianMatrix step_matrix(const HermitianMatrix& h, const HermitianMatrix& g,
                                   double lambda, double noise_scale, double dt,
                                   std::span<const double> dW) {
  h.mat().check_same_dim(g.mat());
  const int n = h.dim();
  const int k_gen = n * n - 1;
  if (static_cast<int>(dW.size()) != k_gen)
    throw validation_error("step_matrix: expected " + std::to_string(k_gen) + " noise increments");

  static thread_local int cached_dim = 0;
  static thread_local std::vector<Cmat> basis;
  if (cached_dim != n) {
    basis = detail::generator_basis(n);
    cached_dim = n;
  }

  // M = -i Xi is Hermitian: lambda dt * (-i [H,G]) + noise_scale * sum dm_a T_a.
  const Cmat comm = commutator(h, g);
  Cmat m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.at(i, j) = cplx(0.0, -1.0) * (-lambda * dt) * comm.at(i, j);
  for (int a = 0; a < k_gen; ++a) {
    const double w = noise_scale * dW[static_cast<std::size_t>(a)];
    if (w == 0.0) continue;
    const Cmat& t = basis[static_cast<std::size_t>(a)];
    for (int i = 0; i < n * n; ++i)
      m.a[static_cast<std::size_t>(i)] += w * t.a[static_cast<std::size_t>(i)];
  }

  const Cmat u = detail::exp_i_hermitian(m);  // e^{Xi} with Xi = iM
  return HermitianMatrix::closest(u.adjoint() * h.mat() * u);
}

// ---------------------------------------------------------------------------
// Ensemble Monte Carlo with deterministic per-path streams.
// ---------------------------------------------------------------------------

struct EnsembleRecord {
  int path = 0;
  double t = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

struct EnsembleResult {
  std::vector<double> terminal_cos_theta;       // one per path
  std::vector<SphereState> terminal_states;     // angle-like view (2x2 reducible runs)
  std::vector<double> terminal_trace_hg;        // matrix scheme only
  std::vector<HermitianMatrix> terminal_matrices;  // matrix scheme only
  std::vector<EnsembleRecord> records;          // path-major, strided
};

struct EnsembleSummary {
  long n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  std::array<long, 50> histogram{};  // uniform bins over [-1, 1]
};

inline EnsembleSummary summarize_cos_theta(const std::vector<double>& samples) {
  EnsembleSummary s;
  s.n = static_cast<long>(samples.size());
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double c : samples) sum += c;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (double c : samples) ss += (c - s.mean) * (c - s.mean);
  s.variance = (s.n > 1) ? ss / static_cast<double>(s.n - 1) : 0.0;
  s.std_error = std::sqrt(s.variance / static_cast<double>(s.n));
  for (double c : samples) {
    int b = static_cast<int>((c + 1.0) * 25.0);
    if (b < 0) b = 0;
    if (b > 49) b = 49;
    ++s.histogram[static_cast<std::size_t>(b)];
  }
  return s;
}

namespace detail {

inline long step_count(double t_final, double dt) {
  return static_cast<long>(std::llround(t_final / dt));
}

inline long record_count(long n_steps, int stride) {
  long c = 1 + n_steps / stride;         // k = 0, stride, 2 stride, ...
  if (n_steps % stride != 0) ++c;        // terminal sample
  return c;
}

template <typename PathFn>
void run_paths(int n_paths, int n_threads, PathFn&& fn) {
  int workers = n_threads > 0 ? n_threads : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (workers == 1 || n_paths < 2 * workers) {
    for (int i = 0; i < n_paths; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n_paths; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Angle-space ensemble (schemes angle_em and z_em). `omega` is the drift
// rate lambda*nu*mu of the underlying flow.
inline EnsembleResult run_ensemble(const SphereState& init, const EnsembleSpec& spec,
                                   const NoiseConfig& noise, double omega) {
  noise.validate();
  spec.validate(omega, noise.diffusion_D);
  if (spec.scheme == Scheme::matrix_conjugation)
    throw validation_error("run_ensemble(SphereState): use the matrix overload for matrix_conjugation");
  if (init.theta <= 0.0 || init.theta >= kPi)
    throw validation_error("run_ensemble: initial theta must lie strictly inside (0, pi)");

  const double D = noise.diffusion_D;
  const long n_steps = detail::step_count(spec.t_final, spec.dt);
  const long recs = spec.record_trajectories ? detail::record_count(n_steps, spec.record_stride) : 0;

  EnsembleResult out;
  out.terminal_cos_theta.resize(static_cast<std::size_t>(spec.n_paths));
  out.terminal_states.resize(static_cast<std::size_t>(spec.n_paths));
  if (recs > 0) out.records.resize(static_cast<std::size_t>(recs * spec.n_paths));

  detail::run_paths(spec.n_paths, spec.n_threads, [&](int path) {
    Rng rng = Rng::stream(noise.master_seed, static_cast<std::uint64_t>(path));
    long rec_at = recs > 0 ? recs * path : 0;
    auto record = [&](double t, double theta, double phi) {
      out.records[static_cast<std::size_t>(rec_at++)] = {path, t, theta, phi};
    };

    if (spec.scheme == Scheme::angle_em) {
      SphereState s = init;
      if (recs > 0) record(0.0, s.theta, s.phi);
      for (long k = 1; k <= n_steps; ++k) {
        const double dW1 = rng.wiener(spec.dt);
        const double dW2 = rng.wiener(spec.dt);
        s = step_angle(s, omega, D, spec.dt, dW1, dW2);
        if (recs > 0 && (k % spec.record_stride == 0 || k == n_steps)) record(k * spec.dt, s.theta, s.phi);
      }
      out.terminal_states[static_cast<std::size_t>(path)] = s;
      out.terminal_cos_theta[static_cast<std::size_t>(path)] = std::cos(s.theta);
    } else {
      double z = std::cos(init.theta);
      if (recs > 0) record(0.0, std::acos(z), init.phi);
      for (long k = 1; k <= n_steps; ++k) {
        z = step_z(z, omega, D, spec.dt, rng.wiener(spec.dt));
        if (recs > 0 && (k % spec.record_stride == 0 || k == n_steps)) record(k * spec.dt, std::acos(z), init.phi);
      }
      out.terminal_states[static_cast<std::size_t>(path)] = {std::acos(z), init.phi};
      out.terminal_cos_theta[static_cast<std::size_t>(path)] = z;
    }
  });
  return out;
}

// Matrix-conjugation ensemble for any supported dimension. For 2x2 runs the
// terminal Bloch angles are recorded as well.
inline EnsembleResult run_ensemble(const HermitianMatrix& h0, const HermitianMatrix& g,
                                   double lambda, const EnsembleSpec& spec,
                                   const NoiseConfig& noise) {
  noise.validate();
  h0.mat().check_same_dim(g.mat());
  const double omega_eff = lambda * g.frobenius_norm() * h0.frobenius_norm();
  spec.validate(omega_eff, noise.diffusion_D);
  if (spec.scheme != Scheme::matrix_conjugation)
    throw validation_error("run_ensemble(HermitianMatrix): scheme must be matrix_conjugation");

  const int n = h0.dim();
  const int k_gen = n * n - 1;
  const double s_noise = noise.noise_scale();
  const long n_steps = detail::step_count(spec.t_final, spec.dt);
  const long recs = (spec.record_trajectories && n == 2)
                        ? detail::record_count(n_steps, spec.record_stride)
                        : 0;

  EnsembleResult out;
  out.terminal_cos_theta.assign(static_cast<std::size_t>(spec.n_paths), 0.0);
  out.terminal_states.resize(static_cast<std::size_t>(spec.n_paths));
  out.terminal_trace_hg.resize(static_cast<std::size_t>(spec.n_paths));
  out.terminal_matrices.resize(static_cast<std::size_t>(spec.n_paths));
  if (recs > 0) out.records.resize(static_cast<std::size_t>(recs * spec.n_paths));

  detail::run_paths(spec.n_paths, spec.n_threads, [&](int path) {
    Rng rng = Rng::stream(noise.master_seed, static_cast<std::uint64_t>(path));
    std::vector<double> dw(static_cast<std::size_t>(k_gen));
    HermitianMatrix h = h0;
    long rec_at = recs > 0 ? recs * path : 0;
    auto record = [&](double t) {
      const BlochDecomposition b = to_bloch(h);
      out.records[static_cast<std::size_t>(rec_at++)] = {path, t, b.theta, b.phi};
    };
    if (recs > 0) record(0.0);
    for (long k = 1; k <= n_steps; ++k) {
      for (auto& w : dw) w = rng.wiener(spec.dt);
      h = step_matrix(h, g, lambda, s_noise, spec.dt, dw);
      if (recs > 0 && (k % spec.record_stride == 0 || k == n_steps)) record(k * spec.dt);
    }
    out.terminal_matrices[static_cast<std::size_t>(path)] = h;
    out.terminal_trace_hg[static_cast<std::size_t>(path)] = trace_product(h, g);
    if (n == 2) {
      const BlochDecomposition b = to_bloch(h);
      out.terminal_states[static_cast<std::size_t>(path)] = {b.theta, b.phi};
      out.terminal_cos_theta[static_cast<std::size_t>(path)] = std::cos(b.theta);
    }
  });
  return out;
}

}  // namespace isoflow
