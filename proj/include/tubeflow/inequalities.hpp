#pragma once

#include <string>
#include <vector>

#include "tubeflow/heatkernel.hpp"
#include "tubeflow/spectral.hpp"

namespace tubeflow {

// Bank of discrete test functions on a tube grid: random Fourier-fiber
// tensors with Dirichlet-compatible fiber factors sin(m pi (v+1)/2), plus
// adversarial members (fiber ground mode, boundary-concentrated bumps, and
// base-only profiles h(s) lifted fiberwise).  A flagged subset is nonnegative
// and safe for p-th power operations.
struct TestFunctionSet {
  std::vector<Vec> members;
  std::vector<int> nonneg;  // indices of the nonnegative subset
  unsigned long long seed = 0;

  int count() const { return static_cast<int>(members.size()); }
};

TestFunctionSet make_test_functions(const TubeGrid& grid, int n_random,
                                    unsigned long long seed);

struct InequalityReport {
  std::string id;
  int trials = 0;
  double min_slack = 0.0;  // LHS-RHS sign convention: slack >= 0 passes
  int worst_function = -1;
  int violations = 0;
  std::vector<double> fitted_constants;
};

// Hardy inequality for the eps-free Sasaki form:
// q_Sa(f) >= (1/4) sum f^2 / delta(v)^2 w_Sa, delta = fiber boundary distance.
InequalityReport hardy_check(const TubeGrid& grid, const TestFunctionSet& fs);

// Ground-state transform identity for the lambda_eps-renormalized form:
// B^0(phi f, phi g) = sum over edges of phi-weighted difference products.
// Returns the relative slack |lhs - rhs| / max(1, |lhs|, |rhs|).
double gs_transform_identity(const FormOperator& form, const Vec& phi,
                             const Vec& f, const Vec& g);

// Power identity B^0(phi f^{p/2}, phi f^{p/2}) =
// p^2/(4(p-1)) B^0(phi f, phi f^{p-1}) for f >= 0 and even p; the relative
// slack decays at second order under grid refinement.
double power_identity_check(const FormOperator& form, const Vec& phi,
                            const Vec& f, int p);

// Weighted-form lower bound with weight e^{a h_bar}, ||d h_bar||_eps <= 1:
// B^0(e^{ah} phi f, e^{-ah} phi f^{p-1}) + (a^2 p / 2) ||f||_{eps,p}^p
//   >= (2/p) B^0(phi f^{p/2}, phi f^{p/2}).
InequalityReport weighted_form_bounds(const FormOperator& form, const Vec& phi,
                                      const TestFunctionSet& fs,
                                      const Vec& h_basic,
                                      const std::vector<double>& a_list,
                                      const std::vector<int>& p_list);

enum class EntropyWeight { MuSa, Nu };  // mu_Sa or phi^2 mu_Sa

// p-entropy int f^p log(f / ||f||_p) dweight with 0 log 0 := 0.
double entropy(const TubeGrid& grid, const Vec& f, int p, EntropyWeight mode,
               const Vec* phi = nullptr);

struct LogSobolevReport {
  double c = 0.0;        // fitted additive constant in beta(theta)
  double alpha = 0.0;    // shift used (fiber ground energy + 1)
  int violations = 0;    // verify-phase violations
  double worst_slack = 0.0;
  double worst_eps = 0.0;
};

// L^2 log-Sobolev with the theta-family of constants
// beta(theta) = c - (3/4) log theta - (theta/2)(lambda0/eps^2 - alpha):
// fit c at the largest eps, verify the frozen c at every smaller eps.
LogSobolevReport logsobolev_fit_verify(const CurveGeometry& curve,
                                       const std::vector<double>& eps_list,
                                       const std::vector<double>& theta_grid,
                                       int Ns, int Nv, int n_random,
                                       unsigned long long seed);

struct RosenReport {
  double k1 = 0.0, k2 = 0.0;
  int violations = 0;
  double worst_slack = 0.0;
  double worst_eps = 0.0;
};

// Rosen's lemma: -int phi^2 f^p log phi <= tau B^0(phi f^{p/2}, phi f^{p/2})
// + nu(tau) ||f||_{eps,p}^p with nu(tau) = k1 + k2 tau - (1/2) log tau.
// (k1, k2) fitted at the largest eps over the tau grid, verified at the rest.
RosenReport rosen_check(const CurveGeometry& curve,
                        const std::vector<double>& eps_list,
                        const std::vector<double>& tau_grid, int Ns, int Nv,
                        const std::vector<int>& p_list, int n_random,
                        unsigned long long seed);

}  // namespace tubeflow
