#pragma once

// Dense complex linear algebra for small Hermitian matrices (dim <= 8):
// construction, Bloch parameterization, commutators, eigensystems.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "isoflow/errors.hpp"

namespace isoflow {

using cplx = std::complex<double>;

inline constexpr int kMaxDim = 8;
inline constexpr double kHermTol = 1e-12;
inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

// General small complex matrix, value semantics, no structural invariant.
struct Cmat {
  int n = 0;
  std::array<cplx, kMaxDim * kMaxDim> a{};

  Cmat() = default;
  explicit Cmat(int dim) : n(dim) {
    if (dim < 1 || dim > kMaxDim) throw validation_error("Cmat: dim out of range [1,8]");
  }

  cplx& at(int i, int j) { return a[static_cast<std::size_t>(i * n + j)]; }
  const cplx& at(int i, int j) const { return a[static_cast<std::size_t>(i * n + j)]; }

  static Cmat zero(int dim) { return Cmat(dim); }

  static Cmat identity(int dim) {
    Cmat m(dim);
    for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
    return m;
  }

  Cmat adjoint() const {
    Cmat r(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r.at(i, j) = std::conj(at(j, i));
    return r;
  }

  cplx trace() const {
    cplx t = 0.0;
    for (int i = 0; i < n; ++i) t += at(i, i);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (int i = 0; i < n * n; ++i) s += std::norm(a[static_cast<std::size_t>(i)]);
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (int i = 0; i < n * n; ++i) m = std::max(m, std::abs(a[static_cast<std::size_t>(i)]));
    return m;
  }

  Cmat& operator+=(const Cmat& o) {
    check_same_dim(o);
    for (int i = 0; i < n * n; ++i) a[static_cast<std::size_t>(i)] += o.a[static_cast<std::size_t>(i)];
    return *this;
  }
  Cmat& operator-=(const Cmat& o) {
    check_same_dim(o);
    for (int i = 0; i < n * n; ++i) a[static_cast<std::size_t>(i)] -= o.a[static_cast<std::size_t>(i)];
    return *this;
  }
  Cmat& operator*=(cplx c) {
    for (int i = 0; i < n * n; ++i) a[static_cast<std::size_t>(i)] *= c;
    return *this;
  }

  friend Cmat operator+(Cmat l, const Cmat& r) { return l += r; }
  friend Cmat operator-(Cmat l, const Cmat& r) { return l -= r; }
  friend Cmat operator*(cplx c, Cmat m) { return m *= c; }
  friend Cmat operator*(Cmat m, cplx c) { return m *= c; }

  friend Cmat operator*(const Cmat& l, const Cmat& r) {
    l.check_same_dim(r);
    Cmat p(l.n);
    for (int i = 0; i < l.n; ++i)
      for (int k = 0; k < l.n; ++k) {
        const cplx lik = l.at(i, k);
        if (lik == 0.0) continue;
        for (int j = 0; j < l.n; ++j) p.at(i, j) += lik * r.at(k, j);
      }
    return p;
  }

  void check_same_dim(const Cmat& o) const {
    if (n != o.n)
      throw validation_error("matrix dimension mismatch: " + std::to_string(n) + " vs " +
                             std::to_string(o.n));
  }
};

inline double max_hermiticity_defect(const Cmat& m) {
  double d = 0.0;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) d = std::max(d, std::abs(m.at(i, j) - std::conj(m.at(j, i))));
  return d;
}

inline Cmat hermitized(const Cmat& m) {
  Cmat r(m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) r.at(i, j) = 0.5 * (m.at(i, j) + std::conj(m.at(j, i)));
  return r;
}

// Determinant by LU with partial pivoting.
inline cplx determinant(const Cmat& m) {
  Cmat lu = m;
  cplx det = 1.0;
  for (int k = 0; k < m.n; ++k) {
    int piv = k;
    double best = std::abs(lu.at(k, k));
    for (int i = k + 1; i < m.n; ++i)
      if (std::abs(lu.at(i, k)) > best) {
        best = std::abs(lu.at(i, k));
        piv = i;
      }
    if (best == 0.0) return 0.0;
    if (piv != k) {
      for (int j = 0; j < m.n; ++j) std::swap(lu.at(k, j), lu.at(piv, j));
      det = -det;
    }
    det *= lu.at(k, k);
    for (int i = k + 1; i < m.n; ++i) {
      const cplx f = lu.at(i, k) / lu.at(k, k);
      for (int j = k; j < m.n; ++j) lu.at(i, j) -= f * lu.at(k, j);
    }
  }
  return det;
}

// Dense N x N Hermitian matrix. Construction validates the Hermiticity
// defect against kHermTol (relative to the largest entry).
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const Cmat& m) : m_(m) { validate(); }

  static HermitianMatrix zero(int dim) { return HermitianMatrix(Cmat::zero(dim)); }
  static HermitianMatrix identity(int dim) { return HermitianMatrix(Cmat::identity(dim)); }

  static HermitianMatrix diagonal(std::span<const double> d) {
    Cmat m(static_cast<int>(d.size()));
    for (int i = 0; i < m.n; ++i) m.at(i, i) = d[static_cast<std::size_t>(i)];
    return HermitianMatrix(m);
  }

  // Symmetrize first, then wrap; used to absorb roundoff from arithmetic.
  static HermitianMatrix closest(const Cmat& m) { return HermitianMatrix(hermitized(m)); }

  int dim() const { return m_.n; }
  const cplx& operator()(int i, int j) const { return m_.at(i, j); }
  const Cmat& mat() const { return m_; }

  double trace() const { return m_.trace().real(); }
  double frobenius_norm() const { return m_.frobenius_norm(); }

  friend HermitianMatrix operator+(const HermitianMatrix& l, const HermitianMatrix& r) {
    return HermitianMatrix(l.m_ + r.m_);
  }
  friend HermitianMatrix operator-(const HermitianMatrix& l, const HermitianMatrix& r) {
    return HermitianMatrix(l.m_ - r.m_);
  }
  friend HermitianMatrix operator*(double c, const HermitianMatrix& m) {
    return HermitianMatrix(cplx(c) * m.m_);
  }

 private:
  void validate() const {
    const double scale = std::max(1.0, m_.max_abs());
    if (max_hermiticity_defect(m_) > kHermTol * scale)
      throw validation_error("HermitianMatrix: Hermiticity defect exceeds tolerance");
  }

  Cmat m_;
};

// tr(AB), real part (exact for Hermitian pairs).
inline double trace_product(const Cmat& a, const Cmat& b) {
  a.check_same_dim(b);
  cplx t = 0.0;
  for (int i = 0; i < a.n; ++i)
    for (int k = 0; k < a.n; ++k) t += a.at(i, k) * b.at(k, i);
  return t.real();
}

inline double trace_product(const HermitianMatrix& a, const HermitianMatrix& b);

// [A, B] = AB - BA. Anti-Hermitian for Hermitian inputs.
inline Cmat commutator(const Cmat& a, const Cmat& b) { return a * b - b * a; }

inline Cmat commutator(const HermitianMatrix& a, const HermitianMatrix& b) {
  return commutator(a.mat(), b.mat());
}

inline double trace_product(const HermitianMatrix& a, const HermitianMatrix& b) {
  return trace_product(a.mat(), b.mat());
}

// [H, [H, G]]; Hermitian, traceless, zero iff H and G commute.
inline HermitianMatrix double_bracket(const HermitianMatrix& h, const HermitianMatrix& g) {
  return HermitianMatrix::closest(commutator(h.mat(), commutator(h.mat(), g.mat())));
}

// ---------------------------------------------------------------------------
// Bloch parameterization of 2x2 Hermitian matrices.
//
// H = (u/2) I + (nu/2) sigma.n with n = (sin t cos p, -sin t sin p, cos t),
// i.e. H_01 = (nu/2) sin(theta) e^{+i phi} and H_00 - H_11 = nu cos(theta).
// The z = cos(theta) convention places the gradient-flow attractor
// diag(u-nu, u+nu)/2 at theta = pi; the azimuth orientation is fixed so that
// the unitary flow variant advances phi at rate +mu.
// ---------------------------------------------------------------------------

struct BlochDecomposition {
  double u = 0.0;      // trace part
  double nu = 0.0;     // eigenvalue gap, >= 0
  double theta = 0.0;  // polar angle in [0, pi]
  double phi = 0.0;    // azimuth in [0, 2 pi)
};

inline double wrap_angle_2pi(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w;
}

inline HermitianMatrix from_bloch(const BlochDecomposition& b) {
  if (b.nu < 0.0) throw validation_error("from_bloch: nu must be nonnegative");
  Cmat m(2);
  const double st = std::sin(b.theta);
  const double ct = std::cos(b.theta);
  m.at(0, 0) = 0.5 * (b.u + b.nu * ct);
  m.at(1, 1) = 0.5 * (b.u - b.nu * ct);
  m.at(0, 1) = 0.5 * b.nu * st * std::polar(1.0, b.phi);
  m.at(1, 0) = std::conj(m.at(0, 1));
  return HermitianMatrix(m);
}

inline HermitianMatrix from_bloch(double u, double nu, double theta, double phi) {
  return from_bloch(BlochDecomposition{u, nu, theta, phi});
}

inline BlochDecomposition to_bloch(const HermitianMatrix& h) {
  if (h.dim() != 2) throw validation_error("to_bloch: defined for 2x2 matrices only");
  BlochDecomposition b;
  b.u = h.trace();
  const double dz = h(0, 0).real() - h(1, 1).real();  // nu cos(theta)
  const double od = std::abs(h(0, 1));                // (nu/2) sin(theta)
  b.nu = std::sqrt(dz * dz + 4.0 * od * od);
  b.theta = (b.nu == 0.0) ? 0.0 : std::atan2(2.0 * od, dz);
  b.phi = (od == 0.0) ? 0.0 : wrap_angle_2pi(std::arg(h(0, 1)));
  return b;
}

// ---------------------------------------------------------------------------
// Eigensystem. 2x2 closed form; cyclic Jacobi rotations for dim >= 3 with
// off-diagonal mass driven below 1e-14 relative to the Frobenius norm.
// ---------------------------------------------------------------------------

struct Eigensystem {
  std::vector<double> values;  // ascending
  Cmat vectors;                // unitary, columns match values
};

namespace detail {

// Deterministic eigenvector phase: largest-magnitude component made real
// and positive (ties by lowest index).
inline void fix_column_phases(Cmat& v) {
  for (int j = 0; j < v.n; ++j) {
    int k = 0;
    double best = -1.0;
    for (int i = 0; i < v.n; ++i) {
      const double m = std::abs(v.at(i, j));
      if (m > best + 1e-15) {
        best = m;
        k = i;
      }
    }
    if (best <= 0.0) continue;
    const cplx ph = v.at(k, j) / best;
    for (int i = 0; i < v.n; ++i) v.at(i, j) /= ph;
  }
}

inline void sort_eigensystem(std::vector<double>& w, Cmat& v) {
  const int n = v.n;
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) { return w[static_cast<std::size_t>(i)] < w[static_cast<std::size_t>(j)]; });
  std::vector<double> ws(static_cast<std::size_t>(n));
  Cmat vs(n);
  for (int j = 0; j < n; ++j) {
    ws[static_cast<std::size_t>(j)] = w[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
    for (int i = 0; i < n; ++i) vs.at(i, j) = v.at(i, idx[static_cast<std::size_t>(j)]);
  }
  w = std::move(ws);
  v = vs;
}

inline Eigensystem eigensystem_2x2(const Cmat& m) {
  const double a = m.at(0, 0).real();
  const double d = m.at(1, 1).real();
  const cplx b = m.at(0, 1);
  const double ab = std::abs(b);
  const double tr = a + d;
  const double gap = std::sqrt((a - d) * (a - d) + 4.0 * ab * ab);
  const double e1 = 0.5 * (tr - gap);
  const double e2 = 0.5 * (tr + gap);

  Cmat v(2);
  if (ab == 0.0) {
    // already diagonal; keep ascending order
    if (a <= d) {
      v.at(0, 0) = 1.0;
      v.at(1, 1) = 1.0;
    } else {
      v.at(0, 1) = 1.0;
      v.at(1, 0) = 1.0;
    }
    Eigensystem es;
    es.values = {std::min(a, d), std::max(a, d)};
    es.vectors = v;
    return es;
  }
  // Eigenvector for e: (b, e - a), normalized; the branch with the larger
  // |e - a| is the numerically stable one for each column.
  auto column = [&](double e, int j) {
    cplx v0 = b;
    cplx v1 = e - a;
    if (std::abs(e - d) > std::abs(e - a)) {
      v0 = e - d;
      v1 = std::conj(b);
    }
    const double nrm = std::sqrt(std::norm(v0) + std::norm(v1));
    v.at(0, j) = v0 / nrm;
    v.at(1, j) = v1 / nrm;
  };
  column(e1, 0);
  column(e2, 1);
  fix_column_phases(v);
  Eigensystem es;
  es.values = {e1, e2};
  es.vectors = v;
  return es;
}

inline double offdiag_norm(const Cmat& m) {
  double s = 0.0;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j)
      if (i != j) s += std::norm(m.at(i, j));
  return std::sqrt(s);
}

inline Eigensystem eigensystem_jacobi(const Cmat& in) {
  const int n = in.n;
  Cmat m = in;
  Cmat v = Cmat::identity(n);
  const double scale = std::max(in.frobenius_norm(), 1e-300);
  constexpr int kMaxSweeps = 100;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (offdiag_norm(m) <= 1e-14 * scale) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const cplx mpq = m.at(p, q);
        const double apq = std::abs(mpq);
        if (apq <= 1e-300) continue;
        // Phase that makes the pivot entry real, then a real Jacobi rotation.
        const cplx ph = mpq / apq;  // e^{i arg(m_pq)}
        const double app = m.at(p, p).real();
        const double aqq = m.at(q, q).real();
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // Unitary U: U_pp = c, U_pq = s*ph, U_qp = -s*conj(ph), U_qq = c.
        // Update M <- U^H M U and V <- V U, touching rows/cols p, q only.
        for (int k = 0; k < n; ++k) {
          const cplx mkp = m.at(k, p);
          const cplx mkq = m.at(k, q);
          m.at(k, p) = c * mkp - s * std::conj(ph) * mkq;
          m.at(k, q) = s * mkp + c * std::conj(ph) * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const cplx mpk = m.at(p, k);
          const cplx mqk = m.at(q, k);
          m.at(p, k) = c * mpk - s * ph * mqk;
          m.at(q, k) = s * mpk + c * ph * mqk;
        }
        for (int k = 0; k < n; ++k) {
          const cplx vkp = v.at(k, p);
          const cplx vkq = v.at(k, q);
          v.at(k, p) = c * vkp - s * std::conj(ph) * vkq;
          v.at(k, q) = s * vkp + c * std::conj(ph) * vkq;
        }
      }
    }
  }

  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = m.at(i, i).real();
  sort_eigensystem(w, v);
  fix_column_phases(v);
  Eigensystem es;
  es.values = std::move(w);
  es.vectors = v;
  return es;
}

}  // namespace detail

inline Eigensystem eigensystem(const HermitianMatrix& h) {
  if (h.dim() > kMaxDim) throw validation_error("eigensystem: dim > 8 unsupported");
  if (h.dim() == 1) {
    Eigensystem es;
    es.values = {h(0, 0).real()};
    es.vectors = Cmat::identity(1);
    return es;
  }
  if (h.dim() == 2) return detail::eigensystem_2x2(h.mat());
  return detail::eigensystem_jacobi(h.mat());
}

inline std::vector<double> eigenvalues(const HermitianMatrix& h) {
  return eigensystem(h).values;
}

// Smallest spectral gap above gap_tol? Flow modules reject degenerate inputs.
inline bool is_nondegenerate(const HermitianMatrix& h, double gap_tol = 1e-9) {
  const auto w = eigenvalues(h);
  for (std::size_t i = 1; i < w.size(); ++i)
    if (w[i] - w[i - 1] <= gap_tol) return false;
  return true;
}

}  // namespace isoflow
