#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tubeflow/sampler.hpp"

using namespace tubeflow;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("rng streams are reproducible and independent") {
  RngStream a(42, 0), b(42, 0), c(42, 1);
  double sa = 0, sb = 0, sc = 0;
  bool differ = false;
  for (int i = 0; i < 64; ++i) {
    const double xa = a.uniform(), xb = b.uniform(), xc = c.uniform();
    CHECK(xa == xb);
    if (xa != xc) differ = true;
    sa += xa;
    sb += xb;
    sc += xc;
  }
  CHECK(differ);
  CHECK(sa == sb);
  RngStream g1(7, 3), g2(7, 3);
  for (int i = 0; i < 16; ++i) CHECK(g1.normal() == g2.normal());
}

TEST_CASE("plane Brownian motion has the right quadratic variation") {
  const double T = 0.5, h = 1e-3;
  const int n = 4000;
  double sum = 0.0, sumsq = 0.0;
  for (int k = 0; k < n; ++k) {
    RngStream rng(1001, static_cast<std::uint32_t>(k));
    const PathSample p = simulate_bm(0.0, 0.0, T, h, rng);
    const double dx = p.c1.back() - p.c1.front();
    const double dy = p.c2.back() - p.c2.front();
    const double r2 = dx * dx + dy * dy;
    sum += r2;
    sumsq += r2 * r2;
  }
  const double mean = sum / n;
  const double sd = std::sqrt((sumsq / n - mean * mean) / n);
  // E |X_T - X_0|^2 = 2T for the Delta/2 generator.
  CHECK(std::abs(mean - 2.0 * T) < 4.0 * sd + 1e-12);
}

TEST_CASE("zero-length path and thinned storage") {
  RngStream rng(3, 0);
  const PathSample p0 = simulate_bm(0.3, -0.1, 0.0, 1e-2, rng);
  CHECK(p0.steps() == 0);
  CHECK(p0.c1[0] == 0.3);
  const PathSample p = simulate_bm(0.0, 0.0, 0.1, 1e-3, rng, 0.0, 10);
  CHECK(p.steps() == 10);
  CHECK(p.dt == doctest::Approx(1e-2));
}

TEST_CASE("rejection acceptance matches the one-dimensional survival oracle") {
  // Flat tube: the base motion never leaves, so acceptance equals the
  // Dirichlet survival probability of the fiber BM.  Series value at
  // eps = 0.3, T = 0.25.
  const auto c = CurveGeometry::make_flat_cylinder(2.0 * kPi);
  const RejectionResult r =
      condition_rejection(c, 0.3, 0.25, 2e-4, 400, 2024);
  CHECK(!r.floor_hit);
  CHECK(static_cast<int>(r.paths.size()) == 400);
  const double oracle = 0.041362;
  const double sd = std::sqrt(oracle * (1.0 - oracle) /
                              static_cast<double>(r.attempts));
  CHECK(std::abs(r.acceptance_rate - oracle) < 4.0 * sd + 0.01);
  for (const PathSample& p : r.paths) CHECK(p.chart == Chart::Ambient);
}

TEST_CASE("rejection acceptance approaches one for wide tubes") {
  const auto c = CurveGeometry::make_circle(1.0);
  const RejectionResult r = condition_rejection(c, 0.6, 0.01, 1e-3, 50, 5);
  CHECK(r.acceptance_rate > 0.8);
}

TEST_CASE("limit sampler: flat weights vanish, circle weights are uniform") {
  const auto flat = CurveGeometry::make_flat_cylinder(5.0);
  const auto paths = limit_sampler(flat, 0.5, 1e-3, 20, 11);
  for (const PathSample& p : paths) {
    CHECK(p.log_weight == 0.0);
    CHECK(p.chart == Chart::Base);
  }
  // Constant curvature: every path carries the same weight, so ESS == n.
  const auto circ = CurveGeometry::make_circle(1.0);
  const auto cp = limit_sampler(circ, 0.5, 1e-3, 40, 12);
  const MCEstimate est = marginal_stat(cp, circ, [](double) { return 1.0; }, 0.5);
  CHECK(est.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.stderr_ == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(est.ess == doctest::Approx(40.0).epsilon(1e-9));
  // Weight oracle: log w = (T/8) kappa^2 for kappa constant.
  CHECK(cp[0].log_weight == doctest::Approx(0.5 / 8.0).epsilon(1e-12));
}

TEST_CASE("h-transform chain matches rejection marginals on a flat tube") {
  const auto c = CurveGeometry::make_flat_cylinder(2.0 * kPi);
  const double eps = 0.3, T = 0.25;
  const auto chain =
      condition_htransform(c, eps, T, 64, 16, T / 50.0, 4000, 99);
  const RejectionResult rej =
      condition_rejection(c, eps, T, 5e-4, 800, 77);
  auto cos1 = [](double s) { return std::cos(s); };
  const MCEstimate a = marginal_stat(chain, c, cos1, 0.125);
  const MCEstimate b = marginal_stat(rej.paths, c, cos1, 0.125);
  const double tol =
      3.0 * std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_) + 0.01;
  CHECK(std::abs(a.mean - b.mean) < tol);
}

TEST_CASE("marginal statistics of the constant observable") {
  const auto c = CurveGeometry::make_circle(1.0);
  const auto paths = limit_sampler(c, 0.2, 1e-3, 50, 8);
  const MCEstimate est = marginal_stat(paths, c, [](double) { return 1.0; }, 0.1);
  CHECK(est.mean == doctest::Approx(1.0));
  CHECK(est.n == 50);
  CHECK_THROWS(marginal_stat(paths, c, [](double) { return 1.0; }, 0.1234567));
}

TEST_CASE("Kolmogorov modulus is positive and grows with the lag") {
  const auto c = CurveGeometry::make_circle(1.0);
  const auto paths = limit_sampler(c, 0.5, 1e-3, 400, 17);
  const MCEstimate small = kolmogorov_modulus(paths, c, 0.2, 0.21, 2);
  const MCEstimate big = kolmogorov_modulus(paths, c, 0.2, 0.4, 2);
  CHECK(small.mean > 0.0);
  CHECK(big.mean > small.mean);
}

TEST_CASE("binary path records are 32 bytes per stored state") {
  const auto c = CurveGeometry::make_circle(1.0);
  const auto paths = limit_sampler(c, 0.1, 1e-2, 3, 23);
  const auto file = std::filesystem::temp_directory_path() / "tf_paths.bin";
  write_paths(paths, file.string());
  std::uint64_t states = 0;
  for (const PathSample& p : paths) states += p.c1.size();
  CHECK(std::filesystem::file_size(file) == 32 * states);
  std::filesystem::remove(file);
}
