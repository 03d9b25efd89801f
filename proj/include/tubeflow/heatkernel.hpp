#pragma once

#include <vector>

#include "tubeflow/grid.hpp"
#include "tubeflow/spectral.hpp"

namespace tubeflow {

enum class Scheme { CrankNicolson, BackwardEuler };

struct StepperConfig {
  Scheme scheme = Scheme::CrankNicolson;
  int steps_per_unit = 400;
  double small_t = 0.05;  // below this, substeps double as t halves
  int min_steps = 2;
  // Damped (backward-Euler) start: kills the spurious oscillations of
  // Crank-Nicolson on rough data such as kernel deltas.  Number of half-step
  // backward-Euler substitutions for the first start_damping CN steps.
  int start_damping = 0;
};

// Number of time steps used for horizon t under cfg.
int step_count(double t, const StepperConfig& cfg);

// Semigroup action e^{-(t/2) (A - cM)} f for the renormalized form.
Vec evolve(const FormOperator& form, const Vec& f, double t,
           const StepperConfig& cfg = {});

struct KernelSlice {
  double t = 0.0;
  double eps = 0.0;
  int source = 0;
  Vec values;  // K_t(., source) against mu_Sa
};

KernelSlice kernel_column(const FormOperator& form, int source, double t,
                          const StepperConfig& cfg = {});

// Columns at an increasing list of times, computed by one incremental march.
std::vector<KernelSlice> kernel_columns(const FormOperator& form, int source,
                                        const std::vector<double>& t_list,
                                        const StepperConfig& cfg = {});

// E0 e^{-(t/2) Delta_L} E0 f: fiber projection, exact spectral step of the
// discrete periodic stencil on the base, re-embedding with phi0.
Vec limit_semigroup(const TubeGrid& grid, const Vec& f, double t);

struct SemigroupErrorRow {
  double eps, t, error;  // mu_Sa-norm difference per (eps, t)
};
// The (s, v) node layout is eps-independent, so one set of test functions
// serves every eps in the sweep.
std::vector<SemigroupErrorRow> semigroup_convergence(
    const CurveGeometry& curve, const std::vector<double>& eps_list,
    const std::vector<double>& t_list, int Ns, int Nv,
    const std::vector<Vec>& test_functions, const StepperConfig& cfg = {});

// ||e^{-(t/2)(H_eps^0 + alpha)}||_{2,inf} estimated as the max over probe
// nodes of the L^2(mu_Sa) norm of the kernel row, times e^{-t alpha/2}.
double ultracontractive_norm(const FormOperator& form, double t, double alpha,
                             const std::vector<int>& probes,
                             const StepperConfig& cfg = {});

// The same norm at an increasing list of times, sharing the kernel marches.
std::vector<double> ultracontractive_curve(const FormOperator& form,
                                           const std::vector<double>& t_list,
                                           double alpha,
                                           const std::vector<int>& probes,
                                           const StepperConfig& cfg = {});

struct MarkovReport {
  int trials = 0;
  int positivity_violations = 0;
  int contraction_violations = 0;
  double worst_negative = 0.0;   // most negative value seen (>= 0 means none)
  double worst_excess = 0.0;     // max of ||Tf||_inf - ||f||_inf over trials
};
// Positivity preservation and L^inf contraction of the non-renormalized
// semigroup, checked with the backward-Euler scheme (unconditionally
// positivity-preserving and sup-norm contracting for this M-matrix stencil,
// so any violation indicates an operator defect rather than scheme noise).
MarkovReport markov_checks(const FormOperator& form, double t, int trials,
                           unsigned long long seed);

struct BoundFit {
  double C = 0.0, B = 0.0, k = 0.0;
  double t_min = 0.0, t_max = 0.0;
  double fit_eps = 0.0;
  double max_rel_slack = 0.0;  // worst violation in verify phase (<=0 passes)
  int violations = 0;
};

struct SubgaussReport {
  BoundFit fit;           // (C, B) for the d_L-form bound
  BoundFit fit_h;         // (C_h, k) for the smoothed-h form
  int verify_violations = 0;
  double worst_slack = 0.0;
  double worst_eps = 0.0, worst_t = 0.0;
};

// Fit (C, B) at eps = max(eps_list) over the stratified source sample and all
// targets, then verify the frozen constants at every smaller eps.
SubgaussReport subgaussian_verify(const CurveGeometry& curve,
                                  const std::vector<double>& eps_list,
                                  const std::vector<double>& t_list, int Ns,
                                  int Nv, int n_sources,
                                  const StepperConfig& cfg = {});

// Stratified sample of source nodes over (s, v), always covering v ~ 0.
std::vector<int> stratified_sources(const TubeGrid& grid, int n);

}  // namespace tubeflow
