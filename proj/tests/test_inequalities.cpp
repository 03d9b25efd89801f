#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tubeflow/inequalities.hpp"

using namespace tubeflow;

namespace {
constexpr double kPi = 3.14159265358979323846;

Vec unit_grad_base_profile(const TubeGrid& g) {
  Vec hbar(g.size());
  const double L = g.curve->total_length();
  for (int i = 0; i < g.Ns; ++i)
    for (int j = 0; j < g.Nv - 1; ++j)
      hbar[g.idx(i, j)] =
          (L / (2.0 * kPi)) * (1.0 - std::cos(2.0 * kPi * g.s[i] / L));
  const double gmax = grad_norm_eps(g, hbar).maxCoeff();
  if (gmax > 1.0) hbar /= gmax;
  return hbar;
}
}  // namespace

TEST_CASE("test function bank shape and nonnegative subset") {
  const auto c = CurveGeometry::make_circle(1.0);
  const TubeGrid g = build_grid(c, 32, 16, 0.2);
  const TestFunctionSet fs = make_test_functions(g, 10, 77);
  CHECK(fs.count() > 10);
  CHECK(!fs.nonneg.empty());
  for (int k : fs.nonneg) CHECK(fs.members[k].minCoeff() >= 0.0);
  for (const Vec& f : fs.members) CHECK(f.size() == g.size());
}

TEST_CASE("Hardy inequality holds on every bank member") {
  const auto c = CurveGeometry::make_ellipse(3.0, 2.0);
  const TubeGrid g = build_grid(c, 48, 24, 0.2);
  const TestFunctionSet fs = make_test_functions(g, 100, 5);
  const InequalityReport rep = hardy_check(g, fs);
  CHECK(rep.trials == fs.count());
  CHECK(rep.violations == 0);
  CHECK(rep.min_slack >= -1e-10);
}

TEST_CASE("ground-state transform identity at solver accuracy") {
  const auto c = CurveGeometry::make_ellipse(3.0, 2.0);
  const TubeGrid g = build_grid(c, 48, 16, 0.1);
  FormOperator H = assemble_H(g);
  const EigenPair gs = ground_state(H, {}, &g);
  H = renormalize(H, RenormMode::LambdaEps, gs.lambda);
  const TestFunctionSet fs = make_test_functions(g, 20, 31);
  double worst = 0.0;
  for (int i = 0; i + 1 < fs.count(); i += 2)
    worst = std::max(
        worst, gs_transform_identity(H, gs.phi, fs.members[i], fs.members[i + 1]));
  CHECK(worst <= std::max(1e-8, 10.0 * gs.residual));
}

TEST_CASE("transform identity degrades with a loose eigensolve") {
  const auto c = CurveGeometry::make_circle(1.0);
  const TubeGrid g = build_grid(c, 32, 16, 0.2);
  FormOperator H0 = assemble_H(g);
  SpectralConfig loose;
  loose.tolerance = 1e-4;
  const EigenPair lo = ground_state(H0, loose, &g);
  const EigenPair hi = ground_state(H0, {}, &g);
  const TestFunctionSet fs = make_test_functions(g, 4, 9);
  const FormOperator Hl = renormalize(H0, RenormMode::LambdaEps, lo.lambda);
  const FormOperator Hh = renormalize(H0, RenormMode::LambdaEps, hi.lambda);
  const double sl =
      gs_transform_identity(Hl, lo.phi, fs.members[0], fs.members[1]);
  const double sh =
      gs_transform_identity(Hh, hi.phi, fs.members[0], fs.members[1]);
  // The identity is exact for an exact eigenpair, so the slack tracks the
  // eigensolver residual.
  CHECK(sh < 1e-8);
  CHECK(sl <= 10.0 * lo.residual + 1e-12);
}

TEST_CASE("power identity: exact at p=2, second order at p=4") {
  const auto c = CurveGeometry::make_circle(1.0);
  auto slack_at = [&](int Ns, int Nv, int p) {
    const TubeGrid g = build_grid(c, Ns, Nv, 0.2);
    FormOperator H = assemble_H(g);
    const EigenPair gs = ground_state(H, {}, &g);
    H = renormalize(H, RenormMode::LambdaEps, gs.lambda);
    Vec f(g.size());
    for (int i = 0; i < g.Ns; ++i)
      for (int j = 0; j < g.Nv - 1; ++j)
        f[g.idx(i, j)] = (1.5 + std::cos(g.s[i])) * phi0(g.v[j]);
    return power_identity_check(H, gs.phi, f, p);
  };
  CHECK(slack_at(32, 16, 2) < 1e-12);
  const double coarse = slack_at(32, 16, 4);
  const double fine = slack_at(64, 32, 4);
  CHECK(coarse / fine > 3.0);
}

TEST_CASE("weighted form lower bound holds across weights and powers") {
  const auto c = CurveGeometry::make_ellipse(3.0, 2.0);
  const TubeGrid g = build_grid(c, 48, 16, 0.2);
  FormOperator H = assemble_H(g);
  const EigenPair gs = ground_state(H, {}, &g);
  H = renormalize(H, RenormMode::LambdaEps, gs.lambda);
  const TestFunctionSet fs = make_test_functions(g, 24, 13);
  const Vec hbar = unit_grad_base_profile(g);
  const InequalityReport rep =
      weighted_form_bounds(H, gs.phi, fs, hbar, {-8, -2, -0.5, 0.5, 2, 8},
                           {2, 4, 8});
  CHECK(rep.trials > 0);
  CHECK(rep.violations == 0);
  CHECK(rep.min_slack >= -1e-6);
}

TEST_CASE("entropy closed forms") {
  const auto c = CurveGeometry::make_circle(1.0);
  const TubeGrid g = build_grid(c, 32, 16, 0.2);
  const double vol = g.w_sa.sum();
  // Constant field: entropy = -(a^p vol / p) log(vol).
  const double a = 1.7;
  const Vec f = Vec::Constant(g.size(), a);
  for (int p : {2, 4}) {
    const double want = -(std::pow(a, p) * vol / p) * std::log(vol);
    CHECK(entropy(g, f, p, EntropyWeight::MuSa) ==
          doctest::Approx(want).epsilon(1e-12));
  }
  // Homogeneity: Ent(lam f) = lam^p Ent(f).
  Vec h(g.size());
  for (int i = 0; i < g.Ns; ++i)
    for (int j = 0; j < g.Nv - 1; ++j)
      h[g.idx(i, j)] = 1.0 + 0.5 * std::cos(g.s[i]) + 0.25 * g.v[j];
  const double lam = 2.3;
  CHECK(entropy(g, lam * h, 2, EntropyWeight::MuSa) ==
        doctest::Approx(lam * lam * entropy(g, h, 2, EntropyWeight::MuSa))
            .epsilon(1e-12));
  // Two-level step function against an explicit evaluation.
  Vec step(g.size());
  double wa = 0.0, wb = 0.0;
  for (int i = 0; i < g.Ns; ++i)
    for (int j = 0; j < g.Nv - 1; ++j) {
      const int k = g.idx(i, j);
      if (g.v[j] < 0.0) {
        step[k] = 2.0;
        wa += g.w_sa[k];
      } else {
        step[k] = 3.0;
        wb += g.w_sa[k];
      }
    }
  const double nrm2 = std::sqrt(4.0 * wa + 9.0 * wb);
  const double want = 4.0 * wa * std::log(2.0 / nrm2) +
                      9.0 * wb * std::log(3.0 / nrm2);
  CHECK(entropy(g, step, 2, EntropyWeight::MuSa) ==
        doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS(entropy(g, Vec::Zero(g.size()), 2, EntropyWeight::MuSa));
}

TEST_CASE("log-Sobolev family: fit then verify downward") {
  const auto c = CurveGeometry::make_circle(1.0);
  const LogSobolevReport rep = logsobolev_fit_verify(
      c, {0.2, 0.1}, {0.2, 0.5, 1.0}, 32, 16, 8, 123);
  CHECK(rep.alpha > 0.0);
  CHECK(rep.violations == 0);
}

TEST_CASE("Rosen bound: fitted (k1, k2) survive smaller eps") {
  const auto c = CurveGeometry::make_circle(1.0);
  const RosenReport rep =
      rosen_check(c, {0.2, 0.1}, {0.2, 0.5, 1.0}, 32, 16, {2, 4}, 8, 321);
  CHECK(rep.k2 >= 0.0);
  CHECK(rep.violations == 0);
}
