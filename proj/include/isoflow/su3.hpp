#pragma once

// Nine-parameter eigenframe for 3x3 Hermitian matrices and the partition
// function Z(lambda) = integral of e^{-lambda tr(HG)} over the isospectral
// manifold with volume element
//
//   dV = (1/128) sin(alpha) sin(vt) (1 - cos(vt)) sin(vp)
//        d alpha d beta3 d vt d vp d xi d eta,
//
// angles vt, vp, alpha in [0, pi], xi, eta, beta3 in [0, 2 pi); total volume
// pi^3/2. With G diagonal, tr(HG) is independent of xi and eta, so their
// (2 pi)^2 factor is taken analytically and quadrature runs over the
// remaining four angles. A Haar-measure sampler provides an independent
// cross-check of the dV integration.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "isoflow/errors.hpp"
#include "isoflow/hermitian.hpp"
#include "isoflow/rng.hpp"

namespace isoflow {

struct Su3Frame {
  double vartheta = 0.0;  // [0, pi]
  double varphi = 0.0;    // [0, pi]
  double alpha = 0.0;     // [0, pi]
  double xi = 0.0;        // [0, 2 pi)
  double eta = 0.0;       // [0, 2 pi)
  double beta3 = 0.0;     // [0, 2 pi)
  std::array<double, 3> eigenvalues{0.0, 0.0, 0.0};
};

// Unitary whose columns are the eigenvectors |E1>, |E2>, |E3> expanded in
// the G-eigenbasis. |E1> fixes a point of CP^2; (alpha, beta3) pick the
// remaining CP^1 frame in its orthogonal complement.
inline Cmat build_frame(const Su3Frame& f) {
  const double st = std::sin(0.5 * f.vartheta), ct = std::cos(0.5 * f.vartheta);
  const double sp = std::sin(0.5 * f.varphi), cp = std::cos(0.5 * f.varphi);
  const double sa = std::sin(0.5 * f.alpha), ca = std::cos(0.5 * f.alpha);
  const cplx exi = std::polar(1.0, f.xi);
  const cplx eeta = std::polar(1.0, f.eta);
  const cplx eb = std::polar(1.0, f.beta3);

  const std::array<cplx, 3> e1 = {st * cp, st * sp * exi, ct * eeta};
  // orthonormal completion of e1
  const std::array<cplx, 3> a = {ct * cp, ct * sp * exi, -st * eeta};
  const std::array<cplx, 3> b = {-sp, cp * exi, 0.0};

  Cmat u(3);
  for (int i = 0; i < 3; ++i) {
    u.at(i, 0) = e1[static_cast<std::size_t>(i)];
    u.at(i, 1) = ca * a[static_cast<std::size_t>(i)] + sa * eb * b[static_cast<std::size_t>(i)];
    u.at(i, 2) = sa * a[static_cast<std::size_t>(i)] - ca * eb * b[static_cast<std::size_t>(i)];
  }
  return u;
}

// H = sum_i E_i |E_i><E_i| reconstructed in the G-eigenbasis.
inline HermitianMatrix frame_hamiltonian(const Su3Frame& f) {
  const Cmat u = build_frame(f);
  Cmat h(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      cplx s = 0.0;
      for (int k = 0; k < 3; ++k)
        s += f.eigenvalues[static_cast<std::size_t>(k)] * u.at(i, k) * std::conj(u.at(j, k));
      h.at(i, j) = s;
    }
  return HermitianMatrix::closest(h);
}

// tr(HG) = sum_{i,j} E_i g_j |<g_j|E_i>|^2; depends only on the moduli, so
// xi and eta drop out.
inline double trace_hg(const Su3Frame& f, const std::array<double, 3>& g_eigs) {
  const double st2 = std::sin(0.5 * f.vartheta) * std::sin(0.5 * f.vartheta);
  const double ct2 = 1.0 - st2;
  const double sp = std::sin(0.5 * f.varphi), cp = std::cos(0.5 * f.varphi);
  const double sa = std::sin(0.5 * f.alpha), ca = std::cos(0.5 * f.alpha);
  const double ct = std::cos(0.5 * f.vartheta);
  const double cb = std::cos(f.beta3);

  const double p11 = st2 * cp * cp;
  const double p12 = st2 * sp * sp;
  const double p13 = ct2;
  // |ca ct cp - sa sp e^{i b}|^2 and companions
  const double p21 = ca * ca * ct * ct * cp * cp + sa * sa * sp * sp - 2.0 * ca * sa * ct * cp * sp * cb;
  const double p22 = ca * ca * ct * ct * sp * sp + sa * sa * cp * cp + 2.0 * ca * sa * ct * sp * cp * cb;
  const double p23 = ca * ca * st2;
  const double p31 = sa * sa * ct * ct * cp * cp + ca * ca * sp * sp + 2.0 * sa * ca * ct * cp * sp * cb;
  const double p32 = sa * sa * ct * ct * sp * sp + ca * ca * cp * cp - 2.0 * sa * ca * ct * sp * cp * cb;
  const double p33 = sa * sa * st2;

  const auto& e = f.eigenvalues;
  return e[0] * (g_eigs[0] * p11 + g_eigs[1] * p12 + g_eigs[2] * p13) +
         e[1] * (g_eigs[0] * p21 + g_eigs[1] * p22 + g_eigs[2] * p23) +
         e[2] * (g_eigs[0] * p31 + g_eigs[1] * p32 + g_eigs[2] * p33);
}

// Integrand weight of dV (the 1/128-normalized product of sines).
inline double volume_weight(const Su3Frame& f) {
  return (1.0 / 128.0) * std::sin(f.alpha) * std::sin(f.vartheta) *
         (1.0 - std::cos(f.vartheta)) * std::sin(f.varphi);
}

inline constexpr double kSu3TotalVolume = 15.503138340149910;  // pi^3 / 2

// ---------------------------------------------------------------------------
// Partition function
// ---------------------------------------------------------------------------

enum class PartitionMethod { quadrature, monte_carlo, haar };

struct PartitionOptions {
  int quad_nodes = 48;          // Gauss-Legendre nodes per dimension
  long mc_samples = 2'000'000;  // uniform-angle Monte Carlo draws
  long haar_samples = 1'000'000;
  std::uint64_t seed = 0;
  int n_threads = 0;
};

struct PartitionEstimate {
  double z = 0.0;
  double error_estimate = 0.0;
};

namespace detail {

// Nodes/weights of n-point Gauss-Legendre on [-1, 1] by Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double dz = -p1 / pp;
      z += dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
  }
}

struct QuadGrid1d {
  std::vector<double> x;  // mapped nodes
  std::vector<double> w;  // mapped weights
};

inline QuadGrid1d mapped_gl(int n, double lo, double hi) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadGrid1d g;
  g.x.resize(static_cast<std::size_t>(n));
  g.w.resize(static_cast<std::size_t>(n));
  const double h = 0.5 * (hi - lo), c = 0.5 * (hi + lo);
  for (int i = 0; i < n; ++i) {
    g.x[static_cast<std::size_t>(i)] = c + h * x[static_cast<std::size_t>(i)];
    g.w[static_cast<std::size_t>(i)] = h * w[static_cast<std::size_t>(i)];
  }
  return g;
}

inline double quadrature_z(const std::array<double, 3>& e, const std::array<double, 3>& g,
                           double lambda, int nodes) {
  const QuadGrid1d gv = mapped_gl(nodes, 0.0, kPi);   // vartheta
  const QuadGrid1d gp = mapped_gl(nodes, 0.0, kPi);   // varphi
  const QuadGrid1d ga = mapped_gl(nodes, 0.0, kPi);   // alpha
  const QuadGrid1d gb = mapped_gl(nodes, 0.0, kTwoPi);  // beta3

  double total = 0.0;
  for (int iv = 0; iv < nodes; ++iv) {
    Su3Frame f;
    f.vartheta = gv.x[static_cast<std::size_t>(iv)];
    f.eigenvalues = e;
    const double wv = gv.w[static_cast<std::size_t>(iv)] * std::sin(f.vartheta) *
                      (1.0 - std::cos(f.vartheta));
    for (int ip = 0; ip < nodes; ++ip) {
      f.varphi = gp.x[static_cast<std::size_t>(ip)];
      const double wp = gp.w[static_cast<std::size_t>(ip)] * std::sin(f.varphi);
      for (int ia = 0; ia < nodes; ++ia) {
        f.alpha = ga.x[static_cast<std::size_t>(ia)];
        const double wa = ga.w[static_cast<std::size_t>(ia)] * std::sin(f.alpha);
        double inner = 0.0;
        for (int ib = 0; ib < nodes; ++ib) {
          f.beta3 = gb.x[static_cast<std::size_t>(ib)];
          inner += gb.w[static_cast<std::size_t>(ib)] * std::exp(-lambda * trace_hg(f, g));
        }
        total += wv * wp * wa * inner;
      }
    }
  }
  // (2 pi)^2 from the analytic xi, eta integrals, 1/128 from dV
  return total * kTwoPi * kTwoPi / 128.0;
}

// Haar-random 3x3 unitary: Gram-Schmidt on a complex Ginibre matrix with the
// leading-entry phase fix per column.
inline void haar_unitary(Rng& rng, Cmat& u) {
  u = Cmat(3);
  for (int j = 0; j < 3; ++j) {
    std::array<cplx, 3> col;
    for (int i = 0; i < 3; ++i) col[static_cast<std::size_t>(i)] = cplx(rng.normal(), rng.normal());
    for (int prev = 0; prev < j; ++prev) {
      cplx proj = 0.0;
      for (int i = 0; i < 3; ++i) proj += std::conj(u.at(i, prev)) * col[static_cast<std::size_t>(i)];
      for (int i = 0; i < 3; ++i) col[static_cast<std::size_t>(i)] -= proj * u.at(i, prev);
    }
    double nrm = 0.0;
    for (const auto& c : col) nrm += std::norm(c);
    nrm = std::sqrt(nrm);
    const cplx ph = col[0] / std::abs(col[0]);
    for (int i = 0; i < 3; ++i) u.at(i, j) = col[static_cast<std::size_t>(i)] / (nrm * ph);
  }
}

}  // namespace detail

// Z(lambda) by the requested method. Quadrature reports |Z_n - Z_{n/2}| as
// its error estimate and rejects results with relative estimate above 1%.
inline PartitionEstimate partition_function(const std::array<double, 3>& e,
                                            const std::array<double, 3>& g, double lambda,
                                            PartitionMethod method,
                                            const PartitionOptions& opt = {}) {
  if (lambda < 0.0) throw validation_error("partition_function: lambda must be >= 0");

  if (method == PartitionMethod::quadrature) {
    const double z_full = detail::quadrature_z(e, g, lambda, opt.quad_nodes);
    const double z_half = detail::quadrature_z(e, g, lambda, std::max(4, opt.quad_nodes / 2));
    const double err = std::abs(z_full - z_half);
    if (err > 0.01 * std::abs(z_full))
      throw guard_error("partition_function: quadrature error estimate " + std::to_string(err) +
                        " exceeds 1% of Z = " + std::to_string(z_full) +
                        "; increase quad_nodes");
    return {z_full, err};
  }

  if (method == PartitionMethod::monte_carlo) {
    // uniform sampling over the four non-factored angles, weighted by dV
    const long n = opt.mc_samples;
    const double vol4 = kPi * kPi * kPi * kTwoPi;
    int workers = opt.n_threads > 0 ? opt.n_threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    std::vector<double> sums(static_cast<std::size_t>(workers), 0.0);
    std::vector<double> sq_sums(static_cast<std::size_t>(workers), 0.0);
    auto worker = [&](int wk) {
      Rng rng = Rng::stream(opt.seed, static_cast<std::uint64_t>(wk) + 101);
      double s = 0.0, s2 = 0.0;
      const long lo = n * wk / workers, hi = n * (wk + 1) / workers;
      Su3Frame f;
      f.eigenvalues = e;
      for (long i = lo; i < hi; ++i) {
        f.vartheta = rng.uniform01() * kPi;
        f.varphi = rng.uniform01() * kPi;
        f.alpha = rng.uniform01() * kPi;
        f.beta3 = rng.uniform01() * kTwoPi;
        const double val = volume_weight(f) * std::exp(-lambda * trace_hg(f, g));
        s += val;
        s2 += val * val;
      }
      sums[static_cast<std::size_t>(wk)] = s;
      sq_sums[static_cast<std::size_t>(wk)] = s2;
    };
    if (workers == 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      for (int wk = 0; wk < workers; ++wk) pool.emplace_back(worker, wk);
      for (auto& t : pool) t.join();
    }
    double s = 0.0, s2 = 0.0;
    for (int wk = 0; wk < workers; ++wk) {
      s += sums[static_cast<std::size_t>(wk)];
      s2 += sq_sums[static_cast<std::size_t>(wk)];
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    const double scale = kTwoPi * kTwoPi * vol4;
    return {scale * mean, scale * std::sqrt(std::max(0.0, var) / n)};
  }

  // haar: estimate <e^{-lambda tr(HG)}> under the invariant measure and
  // rescale by the lambda = 0 volume.
  const long n = opt.haar_samples;
  Rng rng(opt.seed ^ 0xABCD1234u);
  Cmat u(3);
  double s = 0.0, s2 = 0.0;
  for (long i = 0; i < n; ++i) {
    detail::haar_unitary(rng, u);
    // H = U E U^H; tr(HG) = sum_j g_j sum_i |U_{ji}|^2 E_i
    double tr = 0.0;
    for (int j = 0; j < 3; ++j) {
      double row = 0.0;
      for (int i = 0; i < 3; ++i) row += std::norm(u.at(j, i)) * e[static_cast<std::size_t>(i)];
      tr += g[static_cast<std::size_t>(j)] * row;
    }
    const double val = std::exp(-lambda * tr);
    s += val;
    s2 += val * val;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  return {kSu3TotalVolume * mean, kSu3TotalVolume * std::sqrt(std::max(0.0, var) / n)};
}

// Probability masses of tr(HG) over given bin edges under the dV-weighted
// density ~ e^{-lambda tr(HG)}, tabulated by tensor quadrature. Model side
// of the stationary-distribution check for the 3x3 stochastic sampler.
inline std::vector<double> trace_hg_distribution(const std::array<double, 3>& e,
                                                 const std::array<double, 3>& g, double lambda,
                                                 const std::vector<double>& edges,
                                                 int nodes = 64) {
  if (edges.size() < 2) throw validation_error("trace_hg_distribution: need at least one bin");
  const detail::QuadGrid1d gv = detail::mapped_gl(nodes, 0.0, kPi);
  const detail::QuadGrid1d gp = detail::mapped_gl(nodes, 0.0, kPi);
  const detail::QuadGrid1d ga = detail::mapped_gl(nodes, 0.0, kPi);
  const detail::QuadGrid1d gb = detail::mapped_gl(nodes, 0.0, kTwoPi);
  std::vector<double> mass(edges.size() - 1, 0.0);
  Su3Frame f;
  f.eigenvalues = e;
  for (int iv = 0; iv < nodes; ++iv) {
    f.vartheta = gv.x[static_cast<std::size_t>(iv)];
    const double wv = gv.w[static_cast<std::size_t>(iv)] * std::sin(f.vartheta) * (1.0 - std::cos(f.vartheta));
    for (int ip = 0; ip < nodes; ++ip) {
      f.varphi = gp.x[static_cast<std::size_t>(ip)];
      const double wp = wv * gp.w[static_cast<std::size_t>(ip)] * std::sin(f.varphi);
      for (int ia = 0; ia < nodes; ++ia) {
        f.alpha = ga.x[static_cast<std::size_t>(ia)];
        const double wa = wp * ga.w[static_cast<std::size_t>(ia)] * std::sin(f.alpha);
        for (int ib = 0; ib < nodes; ++ib) {
          f.beta3 = gb.x[static_cast<std::size_t>(ib)];
          const double tr = trace_hg(f, g);
          const double wgt = wa * gb.w[static_cast<std::size_t>(ib)] * std::exp(-lambda * tr);
          auto it = std::upper_bound(edges.begin(), edges.end(), tr);
          long b = static_cast<long>(it - edges.begin()) - 1;
          if (b < 0) b = 0;
          if (b >= static_cast<long>(mass.size())) b = static_cast<long>(mass.size()) - 1;
          mass[static_cast<std::size_t>(b)] += wgt;
        }
      }
    }
  }
  double total = 0.0;
  for (double m : mass) total += m;
  for (double& m : mass) m /= total;
  return mass;
}

}  // namespace isoflow
