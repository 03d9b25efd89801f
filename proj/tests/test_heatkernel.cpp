#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tubeflow/heatkernel.hpp"
#include "tubeflow/rng.hpp"

using namespace tubeflow;

namespace {
constexpr double kPi = 3.14159265358979323846;

FormOperator flat_renormalized(const TubeGrid& g) {
  FormOperator H = assemble_H(g);
  return renormalize(H, RenormMode::Lambda0OverEps2, std::nullopt, g.hv);
}
}  // namespace

TEST_CASE("step counting with small-t substep doubling") {
  StepperConfig cfg;
  CHECK(step_count(1.0, cfg) == 400);
  CHECK(step_count(0.5, cfg) == 200);
  CHECK(step_count(0.05, cfg) == 20);
  // Below small_t the steps-per-unit rate doubles per halving.
  CHECK(step_count(0.025, cfg) == 20);
  CHECK(step_count(0.0125, cfg) == 20);
  CHECK(step_count(1e-9, cfg) >= cfg.min_steps);
}

TEST_CASE("ground state is stationary under the renormalized flow") {
  const auto c = CurveGeometry::make_flat_cylinder(2.0 * kPi);
  const TubeGrid g = build_grid(c, 48, 16, 0.25);
  const FormOperator H = flat_renormalized(g);
  Vec f(g.size());
  for (int i = 0; i < g.Ns; ++i)
    for (int j = 0; j < g.Nv - 1; ++j) f[g.idx(i, j)] = phi0(g.v[j]);
  const Vec out = evolve(H, f, 1.0);
  CHECK((out - f).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("flat spectral oracle for a separable mode") {
  const auto c = CurveGeometry::make_flat_cylinder(2.0 * kPi);
  const TubeGrid g = build_grid(c, 64, 16, 0.25);
  const FormOperator H = flat_renormalized(g);
  Vec f(g.size());
  for (int i = 0; i < g.Ns; ++i)
    for (int j = 0; j < g.Nv - 1; ++j)
      f[g.idx(i, j)] = phi0(g.v[j]) * std::cos(g.s[i]);
  const double t = 0.5;
  StepperConfig cfg;
  cfg.steps_per_unit = 1600;  // push the O(dt^2) stepper error below 1e-6
  const Vec out = evolve(H, f, t, cfg);
  // Discrete base eigenvalue of the k=1 periodic mode.
  const double lam = (2.0 / (g.hs * g.hs)) * (1.0 - std::cos(2.0 * kPi / g.Ns));
  const Vec want = std::exp(-0.5 * t * lam) * f;
  CHECK((out - want).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("Chapman-Kolmogorov composition") {
  const auto c = CurveGeometry::make_circle(1.0);
  const TubeGrid g = build_grid(c, 32, 16, 0.2);
  const FormOperator H = flat_renormalized(g);
  RngStream rng(21, 0);
  Vec f(g.size());
  for (int i = 0; i < f.size(); ++i) f[i] = rng.uniform();
  const Vec two = evolve(H, evolve(H, f, 0.25), 0.25);
  const Vec one = evolve(H, f, 0.5);
  CHECK((two - one).cwiseAbs().maxCoeff() < 1e-8 * f.cwiseAbs().maxCoeff());
}

TEST_CASE("kernel column: eigenfunction identity, positivity, mass") {
  const auto c = CurveGeometry::make_flat_cylinder(2.0 * kPi);
  const TubeGrid g = build_grid(c, 48, 16, 0.25);
  FormOperator H = assemble_H(g);
  const EigenPair gs = ground_state(H, {}, &g);
  const FormOperator H0 = renormalize(H, RenormMode::Lambda0OverEps2,
                                      std::nullopt, g.hv);
  const int src = g.idx(5, 7);
  const double t = 0.5;
  const KernelSlice slice = kernel_column(H0, src, t);
  CHECK(slice.values.minCoeff() > -1e-10);
  // int K phi dmu_Sa = e^{-(t/2)(lambda - renorm)} phi(source).
  const double integ = slice.values.dot(g.w_sa.cwiseProduct(gs.phi));
  const double want =
      std::exp(-0.5 * t * (gs.lambda - H0.renorm_const)) * gs.phi[src];
  CHECK(integ == doctest::Approx(want).epsilon(1e-6));
  // Non-renormalized kernel mass is substochastic.
  const KernelSlice raw = kernel_column(H, src, t);
  CHECK(raw.values.dot(g.w_sa) <= 1.0 + 1e-10);
}

TEST_CASE("kernel symmetry spot checks") {
  const auto c = CurveGeometry::make_circle(1.0);
  const TubeGrid g = build_grid(c, 32, 16, 0.2);
  const FormOperator H = flat_renormalized(g);
  const int a = g.idx(3, 7), b = g.idx(17, 4);
  const KernelSlice ka = kernel_column(H, a, 0.3);
  const KernelSlice kb = kernel_column(H, b, 0.3);
  const double scale = std::max(std::abs(ka.values[b]), std::abs(kb.values[a]));
  CHECK(std::abs(ka.values[b] - kb.values[a]) < 1e-8 * std::max(1.0, scale));
}

TEST_CASE("kernel columns march matches independent columns") {
  const auto c = CurveGeometry::make_circle(1.0);
  const TubeGrid g = build_grid(c, 32, 16, 0.2);
  const FormOperator H = flat_renormalized(g);
  const int src = g.idx(0, 7);
  const auto cols = kernel_columns(H, src, {0.25, 0.5});
  const KernelSlice direct = kernel_column(H, src, 0.25);
  CHECK((cols[0].values - direct.values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(cols[1].t == 0.5);
}

TEST_CASE("limit semigroup: fiber mode fixed, orthogonal part killed") {
  const auto c = CurveGeometry::make_flat_cylinder(2.0 * kPi);
  const TubeGrid g = build_grid(c, 32, 16, 0.25);
  Vec f(g.size()), orth(g.size());
  for (int i = 0; i < g.Ns; ++i)
    for (int j = 0; j < g.Nv - 1; ++j) {
      f[g.idx(i, j)] = phi0(g.v[j]);
      orth[g.idx(i, j)] = std::sin(kPi * (g.v[j] + 1.0));  // second fiber mode
    }
  CHECK((limit_semigroup(g, f, 0.7) - f).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(limit_semigroup(g, orth, 0.7).cwiseAbs().maxCoeff() < 1e-12);
  // Base mode decays with the discrete periodic eigenvalue.
  Vec fm(g.size());
  for (int i = 0; i < g.Ns; ++i)
    for (int j = 0; j < g.Nv - 1; ++j)
      fm[g.idx(i, j)] = phi0(g.v[j]) * std::cos(g.s[i]);
  const double lam = (2.0 / (g.hs * g.hs)) * (1.0 - std::cos(2.0 * kPi / g.Ns));
  const Vec got = limit_semigroup(g, fm, 0.7);
  CHECK((got - std::exp(-0.35 * lam) * fm).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("semigroup convergence is monotone on the circle") {
  const auto c = CurveGeometry::make_circle(1.0);
  const TubeGrid g0 = build_grid(c, 48, 16, 0.2);
  Vec f(g0.size());
  for (int i = 0; i < g0.Ns; ++i)
    for (int j = 0; j < g0.Nv - 1; ++j)
      f[g0.idx(i, j)] = phi0(g0.v[j]) * (1.0 + std::cos(g0.s[i]));
  const auto rows = semigroup_convergence(c, {0.2, 0.1}, {0.5}, 48, 16, {f});
  CHECK(rows[1].error < rows[0].error);
}

TEST_CASE("markov checks find no violations") {
  const auto c = CurveGeometry::make_ellipse(3.0, 2.0);
  const TubeGrid g = build_grid(c, 32, 16, 0.2);
  const FormOperator H = assemble_H(g);
  const MarkovReport rep = markov_checks(H, 0.5, 20, 99);
  CHECK(rep.positivity_violations == 0);
  CHECK(rep.contraction_violations == 0);
}

TEST_CASE("flat ultracontractive slope is -(m+1)/4") {
  const auto c = CurveGeometry::make_flat_cylinder(2.0 * kPi);
  const TubeGrid g = build_grid(c, 48, 24, 0.2);
  const FormOperator H = flat_renormalized(g);
  const double alpha = kPi * kPi / 4.0 + 1.0;
  const std::vector<double> ts = {0.05, 0.1, 0.2, 0.4, 0.8};
  const auto norms =
      ultracontractive_curve(H, ts, alpha, {g.idx(0, 11), g.idx(13, 5)});
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    const double x = std::log(ts[i]), y = std::log(norms[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(ts.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(-0.75).epsilon(0.1));
}

TEST_CASE("subgaussian fit freezes constants and verifies downward") {
  const auto c = CurveGeometry::make_circle(1.0);
  const SubgaussReport rep =
      subgaussian_verify(c, {0.2, 0.1}, {0.1, 0.3, 0.6, 1.0}, 48, 16, 8);
  CHECK(rep.fit.C > 0.0);
  CHECK(rep.fit.B > 0.0);
  CHECK(rep.fit_h.k > 1.0);
  CHECK(rep.verify_violations == 0);
}

TEST_CASE("stratified sources cover the fiber center") {
  const auto c = CurveGeometry::make_circle(1.0);
  const TubeGrid g = build_grid(c, 32, 16, 0.2);
  const auto src = stratified_sources(g, 16);
  CHECK(static_cast<int>(src.size()) >= 8);
  bool center = false;
  for (int k : src)
    if (std::abs(g.v[k % (g.Nv - 1)]) < g.hv) center = true;
  CHECK(center);
}
