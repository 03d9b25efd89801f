#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tubeflow/spectral.hpp"

using namespace tubeflow;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("flat cylinder ground pair is exact") {
  const auto c = CurveGeometry::make_flat_cylinder(2.0 * kPi);
  const double eps = 0.25;
  const TubeGrid g = build_grid(c, 64, 16, eps);
  const FormOperator H = assemble_H(g);
  const EigenPair p = ground_state(H, {}, &g);
  CHECK(p.lambda ==
        doctest::Approx(lambda0_discrete(g.hv) / (eps * eps)).epsilon(1e-10));
  CHECK(p.residual < 1e-10);
  // Eigenvector equals phi0 / sqrt(Lambda) in the discrete normalization.
  const double isq = 1.0 / std::sqrt(c.total_length());
  double worst = 0.0;
  for (int i = 0; i < g.Ns; ++i)
    for (int j = 0; j < g.Nv - 1; ++j)
      worst = std::max(worst,
                       std::abs(p.phi[g.idx(i, j)] - phi0(g.v[j]) * isq));
  CHECK(worst < 1e-8);
}

TEST_CASE("flat cylinder second eigenvalue adds the first base mode") {
  const auto c = CurveGeometry::make_flat_cylinder(2.0 * kPi);
  const double eps = 0.25;
  const TubeGrid g = build_grid(c, 64, 16, eps);
  const FormOperator H = assemble_H(g);
  const auto pairs = lowest_eigenpairs(H, 2, {}, &g);
  const double base1 =
      (2.0 / (g.hs * g.hs)) * (1.0 - std::cos(2.0 * kPi / g.Ns));
  CHECK(pairs[1].lambda - pairs[0].lambda ==
        doctest::Approx(base1).epsilon(1e-8));
  CHECK(pairs[0].lambda < pairs[1].lambda);
}

TEST_CASE("flat ball mode helper") {
  const EigenPair p = flat_ball_mode(16);
  CHECK(p.lambda == doctest::Approx(kPi * kPi / 4.0));
  // Discrete fiber norm of phi0 is exactly 1.
  double nrm = 0.0;
  for (int j = 0; j < 15; ++j) nrm += p.phi[j] * p.phi[j] * (2.0 / 16);
  CHECK(nrm == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("circle base Schroedinger oracle is exact for constant curvature") {
  const auto c = CurveGeometry::make_circle(1.0);
  // -d^2/ds^2 - kappa^2/4 on the circle: constant eigenfunction, level -1/4.
  CHECK(base_schrodinger_ground(c, 128, -0.25) ==
        doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("gap sweep on the circle approaches the base oracle") {
  const auto c = CurveGeometry::make_circle(1.0);
  const auto rows = eigen_gap_sweep(c, {0.2, 0.1}, 96, 24);
  // Absorbed-generator gap tends to the bottom of -d^2/ds^2 - kappa^2/4.
  CHECK(rows[1].gap_absorbed == doctest::Approx(-0.25).epsilon(0.02));
  // The gap of the full (potential-carrying) operator tends to zero instead.
  CHECK(std::abs(rows[1].gap_H) < std::abs(rows[1].gap_absorbed) / 5.0);
  CHECK(rows[0].residual < 1e-9);
  CHECK(rows[1].residual < 1e-9);
  // Smaller eps is closer to the limit.
  CHECK(std::abs(rows[1].gap_absorbed + 0.25) <
        std::abs(rows[0].gap_absorbed + 0.25));
}

TEST_CASE("ground state envelope brackets phi/delta") {
  const auto c = CurveGeometry::make_ellipse(3.0, 2.0);
  const TubeGrid g = build_grid(c, 64, 16, 0.2);
  const FormOperator H = assemble_H(g);
  const EigenPair p = ground_state(H, {}, &g);
  const Envelope env = envelope_fit(p, g);
  CHECK(env.c > 0.0);
  CHECK(env.C > env.c);
  CHECK(env.C < 10.0 * env.c);  // comparable to delta throughout
}

TEST_CASE("ground state convergence to the fiber mode") {
  const auto c = CurveGeometry::make_circle(1.0);
  const auto rows = ground_state_convergence(c, {0.2, 0.1}, 64, 16);
  CHECK(rows[1].l2_dist < rows[0].l2_dist);
  CHECK(rows[1].h1_dist < rows[0].h1_dist);
  CHECK(rows[1].l2_dist < 0.05);
}

TEST_CASE("solver reports failure on iteration starvation") {
  const auto c = CurveGeometry::make_circle(1.0);
  const TubeGrid g = build_grid(c, 32, 16, 0.2);
  const FormOperator H = assemble_H(g);
  SpectralConfig cfg;
  cfg.max_iterations = 1;
  CHECK_THROWS(ground_state(H, cfg, &g));
}
