#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "isoflow/hermitian.hpp"
#include "isoflow/io.hpp"
#include "isoflow/rng.hpp"
#include "support/oracles.hpp"

using namespace isoflow;
using Catch::Approx;

namespace {

Cmat pauli_x() {
  Cmat m(2);
  m.at(0, 1) = 1.0;
  m.at(1, 0) = 1.0;
  return m;
}
Cmat pauli_y() {
  Cmat m(2);
  m.at(0, 1) = cplx(0.0, -1.0);
  m.at(1, 0) = cplx(0.0, 1.0);
  return m;
}
Cmat pauli_z() {
  Cmat m(2);
  m.at(0, 0) = 1.0;
  m.at(1, 1) = -1.0;
  return m;
}

oracle::Mat to_oracle(const Cmat& m) {
  oracle::Mat o = oracle::zeros(m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) o[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m.at(i, j);
  return o;
}

HermitianMatrix random_hermitian(int n, Rng& rng, double scale = 1.0) {
  Cmat m(n);
  for (int i = 0; i < n; ++i) {
    m.at(i, i) = scale * (2.0 * rng.uniform01() - 1.0);
    for (int j = i + 1; j < n; ++j) {
      m.at(i, j) = scale * cplx(2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0);
      m.at(j, i) = std::conj(m.at(i, j));
    }
  }
  return HermitianMatrix(m);
}

}  // namespace

TEST_CASE("commutator basics") {
  Rng rng(11);
  SECTION("any matrix commutes with itself") {
    const HermitianMatrix h = random_hermitian(3, rng);
    REQUIRE(commutator(h, h).frobenius_norm() == Approx(0.0).margin(1e-14));
  }
  SECTION("Pauli algebra: [sx, sy] = 2i sz") {
    const Cmat c = commutator(pauli_x(), pauli_y());
    const Cmat expect = cplx(0.0, 2.0) * pauli_z();
    REQUIRE((c - expect).max_abs() < 1e-15);
  }
  SECTION("[H, G] against direct multiplication for the equatorial state") {
    const HermitianMatrix h = from_bloch(0.0, 1.0, kPi / 2.0, 0.0);
    const HermitianMatrix g = HermitianMatrix(pauli_z());
    const Cmat c = commutator(h, g);
    const oracle::Mat oc = oracle::commutator(to_oracle(h.mat()), to_oracle(g.mat()));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        REQUIRE(std::abs(c.at(i, j) - oc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) < 1e-15);
    // frozen from the oracle: [H, sz] for H = sx/2 has Frobenius norm sqrt(2)
    REQUIRE(c.frobenius_norm() == Approx(std::sqrt(2.0)).epsilon(1e-14));
  }
  SECTION("result is anti-Hermitian") {
    const HermitianMatrix a = random_hermitian(4, rng);
    const HermitianMatrix b = random_hermitian(4, rng);
    const Cmat c = commutator(a, b);
    REQUIRE((c + c.adjoint()).max_abs() < 1e-13);
  }
  SECTION("dimension mismatch rejected") {
    const HermitianMatrix a = random_hermitian(2, rng);
    const HermitianMatrix b = random_hermitian(3, rng);
    REQUIRE_THROWS_AS(commutator(a, b), validation_error);
  }
}

TEST_CASE("double bracket") {
  Rng rng(12);
  SECTION("commuting diagonal pair gives zero") {
    const HermitianMatrix h = HermitianMatrix::diagonal(std::array{1.0, 2.0, 3.0});
    const HermitianMatrix g = HermitianMatrix::diagonal(std::array{-1.0, 0.5, 2.0});
    REQUIRE(double_bracket(h, g).frobenius_norm() == Approx(0.0).margin(1e-14));
  }
  SECTION("[sx, [sx, sz]] matches brute-force multiplication") {
    const oracle::Mat ox = to_oracle(pauli_x());
    const oracle::Mat oz = to_oracle(pauli_z());
    const oracle::Mat inner = oracle::commutator(ox, oz);
    const oracle::Mat outer = oracle::commutator(ox, inner);
    const HermitianMatrix db = double_bracket(HermitianMatrix(pauli_x()), HermitianMatrix(pauli_z()));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        REQUIRE(std::abs(db(i, j) - outer[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) < 1e-14);
    // frozen value: 4 sigma_z
    REQUIRE(db(0, 0).real() == Approx(4.0));
    REQUIRE(db(1, 1).real() == Approx(-4.0));
  }
  SECTION("always traceless and Hermitian") {
    for (int rep = 0; rep < 50; ++rep) {
      const int n = 2 + static_cast<int>(rng.uniform01() * 3);
      const HermitianMatrix h = random_hermitian(n, rng);
      const HermitianMatrix g = random_hermitian(n, rng);
      const HermitianMatrix db = double_bracket(h, g);
      REQUIRE(std::abs(db.trace()) < 1e-12);
      REQUIRE(max_hermiticity_defect(db.mat()) < 1e-12);
    }
  }
}

TEST_CASE("eigensystem") {
  Rng rng(13);
  SECTION("identity matrix") {
    const auto es = eigensystem(HermitianMatrix::identity(4));
    for (double v : es.values) REQUIRE(v == Approx(1.0));
  }
  SECTION("unit-gap Bloch matrix has eigenvalues -1/2, +1/2") {
    const auto es = eigensystem(from_bloch(0.0, 1.0, 1.1, 2.2));
    REQUIRE(es.values[0] == Approx(-0.5).margin(1e-12));
    REQUIRE(es.values[1] == Approx(0.5).margin(1e-12));
  }
  SECTION("random 3x3 agrees with the characteristic-cubic oracle") {
    for (int rep = 0; rep < 100; ++rep) {
      const HermitianMatrix h = random_hermitian(3, rng, 2.0);
      const auto es = eigensystem(h);
      const auto expect = oracle::hermitian3_eigenvalues(to_oracle(h.mat()));
      for (int i = 0; i < 3; ++i)
        REQUIRE(es.values[static_cast<std::size_t>(i)] == Approx(expect[static_cast<std::size_t>(i)]).margin(1e-9));
    }
  }
  SECTION("residuals and unitarity across dimensions") {
    for (int n = 2; n <= 8; ++n) {
      const HermitianMatrix h = random_hermitian(n, rng, 3.0);
      const auto es = eigensystem(h);
      const double hnorm = h.frobenius_norm();
      // residual |Hv - Ev| per pair
      for (int k = 0; k < n; ++k) {
        double res = 0.0;
        for (int i = 0; i < n; ++i) {
          cplx hv = 0.0;
          for (int j = 0; j < n; ++j) hv += h(i, j) * es.vectors.at(j, k);
          res += std::norm(hv - es.values[static_cast<std::size_t>(k)] * es.vectors.at(i, k));
        }
        REQUIRE(std::sqrt(res) <= 1e-10 * std::max(1.0, hnorm));
      }
      const Cmat gram = es.vectors.adjoint() * es.vectors;
      REQUIRE((gram - Cmat::identity(n)).max_abs() < 1e-10);
      REQUIRE(std::is_sorted(es.values.begin(), es.values.end()));
    }
  }
  SECTION("degeneracy predicate") {
    REQUIRE(is_nondegenerate(HermitianMatrix::diagonal(std::array{0.0, 1.0})));
    REQUIRE_FALSE(is_nondegenerate(HermitianMatrix::diagonal(std::array{1.0, 1.0 + 1e-12})));
    REQUIRE_FALSE(is_nondegenerate(HermitianMatrix::identity(3)));
  }
}

TEST_CASE("bloch parameterization") {
  Rng rng(14);
  SECTION("north pole with gap 2 is diag(1, -1)") {
    const HermitianMatrix h = from_bloch(0.0, 2.0, 0.0, 0.0);
    REQUIRE(h(0, 0).real() == Approx(1.0));
    REQUIRE(h(1, 1).real() == Approx(-1.0));
    REQUIRE(std::abs(h(0, 1)) < 1e-15);
  }
  SECTION("zero gap is a pure trace part") {
    const HermitianMatrix h = from_bloch(2.0, 0.0, 0.7, 1.3);
    REQUIRE((h.mat() - Cmat::identity(2)).max_abs() < 1e-15);
  }
  SECTION("determinant identity against LU oracle over 100 draws") {
    for (int rep = 0; rep < 100; ++rep) {
      const double u = 4.0 * rng.uniform01() - 2.0;
      const double nu = 2.0 * rng.uniform01();
      const double th = kPi * rng.uniform01();
      const double ph = kTwoPi * rng.uniform01();
      const HermitianMatrix h = from_bloch(u, nu, th, ph);
      const cplx det = determinant(h.mat());
      REQUIRE(det.real() == Approx((u * u - nu * nu) / 4.0).margin(1e-12));
      REQUIRE(std::abs(det.imag()) < 1e-12);
      REQUIRE(h.trace() == Approx(u).margin(1e-12));
    }
  }
  SECTION("round trip through to_bloch") {
    for (int rep = 0; rep < 200; ++rep) {
      BlochDecomposition b;
      b.u = 4.0 * rng.uniform01() - 2.0;
      b.nu = 0.1 + 2.0 * rng.uniform01();
      b.theta = 0.05 + (kPi - 0.1) * rng.uniform01();  // poles excluded
      b.phi = kTwoPi * rng.uniform01();
      const BlochDecomposition r = to_bloch(from_bloch(b));
      REQUIRE(r.u == Approx(b.u).margin(1e-10));
      REQUIRE(r.nu == Approx(b.nu).margin(1e-10));
      REQUIRE(r.theta == Approx(b.theta).margin(1e-10));
      const double dphi = std::remainder(r.phi - b.phi, kTwoPi);
      REQUIRE(std::abs(dphi) < 1e-10);
    }
  }
  SECTION("to_bloch requires dim 2") {
    REQUIRE_THROWS_AS(to_bloch(HermitianMatrix::identity(3)), validation_error);
  }
}

TEST_CASE("hermiticity discipline") {
  SECTION("constructor rejects non-Hermitian input") {
    Cmat m(2);
    m.at(0, 1) = 1.0;
    m.at(1, 0) = 0.5;
    REQUIRE_THROWS_AS(HermitianMatrix(m), validation_error);
  }
  SECTION("trace and determinant are real") {
    Rng rng(15);
    Cmat m(3);
    for (int i = 0; i < 3; ++i) {
      m.at(i, i) = rng.uniform01();
      for (int j = i + 1; j < 3; ++j) {
        m.at(i, j) = cplx(rng.uniform01(), rng.uniform01());
        m.at(j, i) = std::conj(m.at(i, j));
      }
    }
    const HermitianMatrix h(m);
    REQUIRE(std::abs(determinant(h.mat()).imag()) < 1e-12);
    REQUIRE(std::abs((h.mat().trace()).imag()) < 1e-12);
  }
  SECTION("commutator norm vanishes exactly for a shared eigenbasis") {
    const HermitianMatrix h = HermitianMatrix::diagonal(std::array{0.2, 0.9, 1.7});
    const HermitianMatrix g = HermitianMatrix::diagonal(std::array{-3.0, 0.0, 5.0});
    REQUIRE(commutator(h, g).frobenius_norm() == 0.0);
  }
}

TEST_CASE("json matrix literals") {
  Rng rng(16);
  const HermitianMatrix h = [&] {
    Cmat m(3);
    for (int i = 0; i < 3; ++i) {
      m.at(i, i) = 2.0 * rng.uniform01() - 1.0;
      for (int j = i + 1; j < 3; ++j) {
        m.at(i, j) = cplx(rng.uniform01(), -rng.uniform01());
        m.at(j, i) = std::conj(m.at(i, j));
      }
    }
    return HermitianMatrix(m);
  }();
  const auto j = matrix_to_json(h);
  const HermitianMatrix back = matrix_from_json(j);
  REQUIRE((back.mat() - h.mat()).max_abs() == 0.0);
  REQUIRE_THROWS_AS(matrix_from_json(nlohmann::json::array()), validation_error);
}
