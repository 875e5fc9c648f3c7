#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "isoflow/bracket_flow.hpp"
#include "isoflow/equilibrium.hpp"
#include "isoflow/hermitian.hpp"
#include "isoflow/rng.hpp"
#include "isoflow/thermalizer.hpp"
#include "support/oracles.hpp"

using namespace isoflow;
using Catch::Approx;

namespace {

std::vector<double> exact_cos_bins(double exponent_a, int nbins) {
  std::vector<double> probs(static_cast<std::size_t>(nbins));
  const double z = std::exp(exponent_a) - std::exp(-exponent_a);
  for (int b = 0; b < nbins; ++b) {
    const double lo = -1.0 + 2.0 * b / nbins, hi = -1.0 + 2.0 * (b + 1) / nbins;
    probs[static_cast<std::size_t>(b)] =
        (std::exp(-exponent_a * lo) - std::exp(-exponent_a * hi)) / z;
  }
  return probs;
}

}  // namespace

TEST_CASE("wiener increment statistics") {
  Rng rng = Rng::stream(99, 0);
  const double dt = 1e-3;
  const long n = 1000000;
  double sum = 0.0, sq = 0.0;
  for (long i = 0; i < n; ++i) {
    const double w = rng.wiener(dt);
    sum += w;
    sq += w * w;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  REQUIRE(std::abs(mean) <= 3.0 * std::sqrt(dt / n));
  REQUIRE(var == Approx(dt).epsilon(0.01));
}

TEST_CASE("drift_theta") {
  SECTION("equator leaves only the flow term") {
    REQUIRE(drift_theta(kPi / 2.0, 2.0, 2.0) == Approx(2.0).margin(1e-15));
  }
  SECTION("Christoffel term pushes away from both poles") {
    REQUIRE(drift_theta(0.1, 0.0, 2.0) > 0.0);
    REQUIRE(drift_theta(kPi - 0.1, 0.0, 2.0) < 0.0);
  }
  SECTION("poles rejected") {
    REQUIRE_THROWS_AS(drift_theta(0.0, 1.0, 1.0), validation_error);
    REQUIRE_THROWS_AS(drift_theta(kPi, 1.0, 1.0), validation_error);
  }
}

TEST_CASE("step_angle") {
  SECTION("zero noise reduces to the deterministic drift") {
    const SphereState s{1.1, 0.4};
    const double dt = 1e-4;
    const SphereState out = step_angle(s, 2.0, 2.0, dt, 0.0, 0.0);
    REQUIRE(out.theta == Approx(1.1 + drift_theta(1.1, 2.0, 2.0) * dt).margin(1e-15));
    REQUIRE(out.phi == Approx(0.4));
  }
  SECTION("theta increments at the equator have variance 2 D dt") {
    Rng rng(41);
    const double D = 2.0, dt = 1e-3;
    const long n = 100000;
    double sum = 0.0, sq = 0.0;
    for (long i = 0; i < n; ++i) {
      const SphereState out = step_angle({kPi / 2.0, 0.0}, 0.0, D, dt, rng.wiener(dt), rng.wiener(dt));
      const double d = out.theta - kPi / 2.0;
      sum += d;
      sq += d * d;
    }
    const double var = sq / n - (sum / n) * (sum / n);
    const double expect = 2.0 * D * dt;
    // sample variance SE ~ var * sqrt(2/n)
    REQUIRE(std::abs(var - expect) < 3.0 * expect * std::sqrt(2.0 / n));
  }
  SECTION("phi increments at the equator have variance 2 D dt") {
    Rng rng(42);
    const double D = 2.0, dt = 1e-3;
    const long n = 100000;
    double sum = 0.0, sq = 0.0;
    for (long i = 0; i < n; ++i) {
      const SphereState out = step_angle({kPi / 2.0, kPi}, 0.0, D, dt, rng.wiener(dt), rng.wiener(dt));
      const double d = std::remainder(out.phi - kPi, kTwoPi);
      sum += d;
      sq += d * d;
    }
    const double var = sq / n - (sum / n) * (sum / n);
    const double expect = 2.0 * D * dt;
    REQUIRE(std::abs(var - expect) < 3.0 * expect * std::sqrt(2.0 / n));
  }
  SECTION("bounds hold after every step under violent noise") {
    Rng rng(43);
    SphereState s{0.05, 0.0};
    for (int i = 0; i < 20000; ++i) {
      s = step_angle(s, 5.0, 3.0, 1e-3, rng.wiener(1e-3), rng.wiener(1e-3));
      REQUIRE(s.theta > 0.0);
      REQUIRE(s.theta < kPi);
      REQUIRE(s.phi >= 0.0);
      REQUIRE(s.phi < kTwoPi);
    }
  }
}

TEST_CASE("step_z") {
  SECTION("poles are deterministic fixed points at zero diffusion") {
    REQUIRE(step_z(1.0, 3.0, 0.0, 1e-3, 0.0) == Approx(1.0));
    REQUIRE(step_z(-1.0, 3.0, 0.0, 1e-3, 0.0) == Approx(-1.0));
  }
  SECTION("zero flow relaxes to the uniform law (KS)") {
    const double D = 2.0, dt = 1e-3;
    const int n_paths = 20000;
    std::vector<double> zs(static_cast<std::size_t>(n_paths));
    for (int p = 0; p < n_paths; ++p) {
      Rng rng = Rng::stream(4242, static_cast<std::uint64_t>(p));
      double z = 0.0;
      for (int k = 0; k < 3000; ++k) z = step_z(z, 0.0, D, dt, rng.wiener(dt));
      zs[static_cast<std::size_t>(p)] = z;
    }
    const double d = oracle::ks_distance(std::move(zs), [](double c) { return (c + 1.0) / 2.0; });
    REQUIRE(d < 0.0138);  // alpha ~ 1e-3 at n = 2e4
  }
  SECTION("long-run mean at lambda mu = 2 hits the closed form") {
    // omega/D = 1, stationary law ~ e^{-z}: mean 2/(lm) - coth(lm/2)
    const double omega = 2.0, D = 2.0, dt = 1e-3;
    const int n_paths = 20000;
    double sum = 0.0, sq = 0.0;
    for (int p = 0; p < n_paths; ++p) {
      Rng rng = Rng::stream(777, static_cast<std::uint64_t>(p));
      double z = 0.0;
      for (int k = 0; k < 5000; ++k) z = step_z(z, omega, D, dt, rng.wiener(dt));
      sum += z;
      sq += z * z;
    }
    const double mean = sum / n_paths;
    const double se = std::sqrt((sq / n_paths - mean * mean) / n_paths);
    REQUIRE(std::abs(mean - (-0.3130352854993313)) < 3.0 * se + 2e-3);
  }
  SECTION("clamped to the interval") {
    Rng rng(44);
    double z = 0.99;
    for (int i = 0; i < 5000; ++i) {
      z = step_z(z, -20.0, 2.0, 1e-3, rng.wiener(1e-3));
      REQUIRE(z >= -1.0);
      REQUIRE(z <= 1.0);
    }
  }
}

TEST_CASE("step_matrix") {
  const HermitianMatrix g = from_bloch(0.0, 2.0, 0.0, 0.0);
  SECTION("zero noise reproduces the deterministic step to O(dt^2)") {
    const HermitianMatrix h = from_bloch(0.0, 1.0, 1.2, 0.7);
    const std::vector<double> no_noise(3, 0.0);
    for (double dt : {1e-2, 5e-3, 2.5e-3}) {
      const HermitianMatrix via_conj = step_matrix(h, g, 1.0, 1.0, dt, no_noise);
      const HermitianMatrix via_rk4 = flow_step(h, g, {1.0, dt, 1.0, FlowVariant::pure_gradient});
      const double err = (via_conj - via_rk4).frobenius_norm();
      REQUIRE(err < 10.0 * dt * dt);
    }
  }
  SECTION("spectrum exactly preserved over 1e5 noisy steps") {
    Rng rng(45);
    HermitianMatrix h = from_bloch(0.3, 1.0, 1.0, 0.0);
    const auto eig0 = eigenvalues(h);
    std::vector<double> dw(3);
    for (int k = 0; k < 100000; ++k) {
      for (auto& w : dw) w = rng.wiener(1e-3);
      h = step_matrix(h, g, 1.0, 1.0, 1e-3, dw);
    }
    const auto eig = eigenvalues(h);
    REQUIRE(std::abs(eig[0] - eig0[0]) < 1e-12);
    REQUIRE(std::abs(eig[1] - eig0[1]) < 1e-12);
  }
  SECTION("3x3 spectrum preserved too") {
    Rng rng(46);
    const HermitianMatrix g3 = HermitianMatrix::diagonal(std::array{-1.0, 0.0, 1.0});
    HermitianMatrix h = HermitianMatrix::diagonal(std::array{-1.0, 0.0, 1.0});
    std::vector<double> dw(8);
    for (int k = 0; k < 20000; ++k) {
      for (auto& w : dw) w = rng.wiener(2e-3);
      h = step_matrix(h, g3, 1.0, 1.0, 2e-3, dw);
    }
    const auto eig = eigenvalues(h);
    // whole-run drift bound; per-step truncation is at roundoff level
    REQUIRE(std::abs(eig[0] + 1.0) < 1e-10);
    REQUIRE(std::abs(eig[1]) < 1e-10);
    REQUIRE(std::abs(eig[2] - 1.0) < 1e-10);
  }
  SECTION("wrong increment count rejected") {
    const HermitianMatrix h = from_bloch(0.0, 1.0, 1.0, 0.0);
    const std::vector<double> dw(5, 0.0);
    REQUIRE_THROWS_AS(step_matrix(h, g, 1.0, 1.0, 1e-3, dw), validation_error);
  }
}

TEST_CASE("run_ensemble determinism") {
  const NoiseConfig noise = NoiseConfig::section6(1.0, 2024);
  EnsembleSpec spec;
  spec.n_paths = 64;
  spec.dt = 1e-3;
  spec.t_final = 0.5;
  spec.scheme = Scheme::angle_em;
  spec.record_trajectories = true;
  spec.record_stride = 100;

  const SphereState init{kPi / 2.0, 0.0};
  const EnsembleResult a = run_ensemble(init, spec, noise, 2.0);
  const EnsembleResult b = run_ensemble(init, spec, noise, 2.0);
  REQUIRE(a.terminal_cos_theta == b.terminal_cos_theta);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    REQUIRE(a.records[i].theta == b.records[i].theta);
    REQUIRE(a.records[i].phi == b.records[i].phi);
  }

  SECTION("independent of worker partitioning") {
    EnsembleSpec serial = spec;
    serial.n_threads = 1;
    EnsembleSpec parallel = spec;
    parallel.n_threads = 4;
    const EnsembleResult s = run_ensemble(init, serial, noise, 2.0);
    const EnsembleResult p = run_ensemble(init, parallel, noise, 2.0);
    REQUIRE(s.terminal_cos_theta == p.terminal_cos_theta);
  }
  SECTION("single path twice is bitwise identical") {
    EnsembleSpec one = spec;
    one.n_paths = 1;
    const EnsembleResult r1 = run_ensemble(init, one, noise, 2.0);
    const EnsembleResult r2 = run_ensemble(init, one, noise, 2.0);
    REQUIRE(r1.terminal_cos_theta[0] == r2.terminal_cos_theta[0]);
  }
}

TEST_CASE("run_ensemble guards fire before work") {
  const NoiseConfig noise = NoiseConfig::section6(1.0, 1);
  EnsembleSpec spec;
  spec.dt = 0.1;  // violates dt <= 0.01/max(omega, D)
  spec.t_final = 1.0;
  REQUIRE_THROWS_AS(run_ensemble(SphereState{1.0, 0.0}, spec, noise, 2.0), guard_error);
  EnsembleSpec bad;
  bad.n_paths = 0;
  REQUIRE_THROWS_AS(run_ensemble(SphereState{1.0, 0.0}, bad, noise, 2.0), validation_error);
}

TEST_CASE("stationary mean under section6 convention") {
  // lambda mu = 2 with nu = 1: omega = 2, D = 2; target <cos> = -0.3130353
  const NoiseConfig noise = NoiseConfig::section6(1.0, 31415);
  EnsembleSpec spec;
  spec.n_paths = 4000;
  spec.dt = 1e-3;
  spec.t_final = 5.0;
  spec.scheme = Scheme::z_em;
  const EnsembleResult r = run_ensemble(SphereState{kPi / 2.0, 0.0}, spec, noise, 2.0);
  const EnsembleSummary s = summarize_cos_theta(r.terminal_cos_theta);
  REQUIRE(std::abs(s.mean - (-0.3130352854993313)) < 3.0 * s.std_error + 2e-3);

  SECTION("strong coupling pins the state near the south pole") {
    // lambda mu = 20: omega = 20, D = 2, t_final = 10/omega
    EnsembleSpec strong = spec;
    strong.dt = 5e-4;
    strong.t_final = 0.5;
    strong.n_paths = 4000;
    const EnsembleResult rs = run_ensemble(SphereState{kPi / 2.0, 0.0}, strong, noise, 20.0);
    const EnsembleSummary ss = summarize_cos_theta(rs.terminal_cos_theta);
    REQUIRE(std::abs(ss.mean - (-0.90000000412230725)) < 3.0 * ss.std_error + 5e-3);
  }
}

TEST_CASE("scheme equivalence smoke test") {
  // full 1e4-path KS comparison lives in the acceptance suite
  const NoiseConfig noise = NoiseConfig::section6(1.0, 555);
  EnsembleSpec spec;
  spec.n_paths = 2000;
  spec.dt = 1e-3;
  spec.t_final = 5.0;
  const SphereState init{kPi / 2.0, 0.0};

  spec.scheme = Scheme::angle_em;
  const auto angle = run_ensemble(init, spec, noise, 2.0).terminal_cos_theta;
  spec.scheme = Scheme::z_em;
  const auto z = run_ensemble(init, spec, noise, 2.0).terminal_cos_theta;
  spec.scheme = Scheme::matrix_conjugation;
  const auto mat = run_ensemble(from_bloch(0.0, 1.0, kPi / 2.0, 0.0), from_bloch(0.0, 2.0, 0.0, 0.0),
                                1.0, spec, noise)
                       .terminal_cos_theta;
  REQUIRE(oracle::ks_distance_two(angle, z) < 0.06);
  REQUIRE(oracle::ks_distance_two(angle, mat) < 0.06);
  REQUIRE(oracle::ks_distance_two(z, mat) < 0.06);
}

TEST_CASE("zero flow gives the uniform sphere law") {
  const NoiseConfig noise = NoiseConfig::section6(1.0, 98765);
  EnsembleSpec spec;
  spec.n_paths = 20000;
  spec.dt = 1e-3;
  spec.t_final = 3.0;
  spec.scheme = Scheme::angle_em;
  const EnsembleResult r = run_ensemble(SphereState{kPi / 2.0, 0.0}, spec, noise, 0.0);
  const double d =
      oracle::ks_distance(r.terminal_cos_theta, [](double c) { return (c + 1.0) / 2.0; });
  REQUIRE(d < 0.0138);
}

TEST_CASE("total variation shrinks toward stationarity") {
  const NoiseConfig noise = NoiseConfig::section6(1.0, 13579);
  const std::vector<double> target = exact_cos_bins(1.0, 50);
  double prev_tv = 1e9;
  for (double t_final : {1.0, 2.5, 5.0}) {
    EnsembleSpec spec;
    spec.n_paths = 4000;
    spec.dt = 1e-3;
    spec.t_final = t_final;
    spec.scheme = Scheme::z_em;
    const EnsembleResult r = run_ensemble(SphereState{kPi / 2.0, 0.0}, spec, noise, 2.0);
    const auto sampled = oracle::binned(r.terminal_cos_theta, -1.0, 1.0, 50);
    const double tv = oracle::total_variation(sampled, target);
    REQUIRE(tv < prev_tv + 0.02);
    prev_tv = tv;
  }
}
