#include "tubeflow/heatkernel.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "tubeflow/rng.hpp"

namespace tubeflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Shared per-dt machinery: the factor of (M + dt/4 A0) serves both the
// Crank-Nicolson step and the backward-Euler half-step.
struct Propagator {
  Propagator(const SpMat& A0, const Vec& mass, double dt) : A0_(A0), mass_(mass), dt_(dt) {
    const int n = static_cast<int>(mass.size());
    SpMat L = A0 * (dt / 4.0);
    for (int i = 0; i < n; ++i) L.coeffRef(i, i) += mass[i];
    L.makeCompressed();
    solver_.compute(L);
    if (solver_.info() != Eigen::Success)
      throw std::runtime_error("evolve: inner factorization failed");
  }
  Vec cn_step(const Vec& f) const {
    Vec rhs = mass_.cwiseProduct(f) - (dt_ / 4.0) * (A0_ * f);
    return solver_.solve(rhs);
  }
  Vec be_half_step(const Vec& f) const { return solver_.solve(mass_.cwiseProduct(f)); }

  const SpMat& A0_;
  const Vec& mass_;
  double dt_;
  Eigen::SimplicialLDLT<SpMat> solver_;
};

Vec march(const SpMat& A0, const Vec& mass, Vec f, double t,
          const StepperConfig& cfg) {
  if (t <= 0.0) return f;
  const int n = step_count(t, cfg);
  const double dt = t / n;
  Propagator prop(A0, mass, dt);
  if (cfg.scheme == Scheme::BackwardEuler) {
    for (int k = 0; k < 2 * n; ++k) f = prop.be_half_step(f);
    return f;
  }
  int damped = std::min(cfg.start_damping, n);
  for (int k = 0; k < 2 * damped; ++k) f = prop.be_half_step(f);
  for (int k = damped; k < n; ++k) f = prop.cn_step(f);
  return f;
}

}  // namespace

int step_count(double t, const StepperConfig& cfg) {
  if (t <= 0.0) return 0;
  double spu = cfg.steps_per_unit;
  if (t < cfg.small_t) {
    const double factor = cfg.small_t / t;
    spu *= std::pow(2.0, std::ceil(std::log2(factor)));
  }
  const int n = static_cast<int>(std::ceil(t * spu - 1e-12));
  return std::max(cfg.min_steps, n);
}

Vec evolve(const FormOperator& form, const Vec& f, double t,
           const StepperConfig& cfg) {
  if (t < 0.0) throw std::invalid_argument("evolve: negative time");
  if (t == 0.0) return f;
  return march(form.renormalized_stiffness(), form.mass, f, t, cfg);
}

KernelSlice kernel_column(const FormOperator& form, int source, double t,
                          const StepperConfig& cfg) {
  if (!(t > 0.0)) throw std::invalid_argument("kernel_column: t must be positive");
  if (step_count(t, cfg) < 2 * std::max(4, cfg.start_damping))
    throw std::invalid_argument("kernel_column: t too small for the configured steps");
  StepperConfig c = cfg;
  c.start_damping = std::max(cfg.start_damping, 4);
  Vec f = Vec::Zero(form.size());
  f[source] = 1.0 / form.mass[source];
  KernelSlice slice;
  slice.t = t;
  slice.eps = form.epsilon;
  slice.source = source;
  slice.values = evolve(form, f, t, c);
  return slice;
}

std::vector<KernelSlice> kernel_columns(const FormOperator& form, int source,
                                        const std::vector<double>& t_list,
                                        const StepperConfig& cfg) {
  for (size_t i = 1; i < t_list.size(); ++i)
    if (!(t_list[i] > t_list[i - 1]))
      throw std::invalid_argument("kernel_columns: t_list must increase");
  const SpMat A0 = form.renormalized_stiffness();
  Vec f = Vec::Zero(form.size());
  f[source] = 1.0 / form.mass[source];
  std::vector<KernelSlice> out;
  double t_prev = 0.0;
  bool first = true;
  for (double t : t_list) {
    StepperConfig c = cfg;
    c.start_damping = first ? std::max(cfg.start_damping, 4) : 0;
    f = march(A0, form.mass, f, t - t_prev, c);
    first = false;
    t_prev = t;
    out.push_back({t, form.epsilon, source, f});
  }
  return out;
}

Vec limit_semigroup(const TubeGrid& grid, const Vec& f, double t) {
  const Projection p = project_E0(grid, f);
  const int Ns = grid.Ns;
  // Exact decay of the discrete periodic stencil modes via a direct DFT.
  std::vector<std::complex<double>> coef(Ns);
  for (int k = 0; k < Ns; ++k) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < Ns; ++i)
      acc += p.base[i] * std::exp(std::complex<double>(0.0, -2.0 * kPi * k * i / Ns));
    const double sk = std::sin(kPi * k / Ns);
    const double lam = 4.0 / (grid.hs * grid.hs) * sk * sk;
    coef[k] = acc * std::exp(-0.5 * t * lam) / static_cast<double>(Ns);
  }
  Vec base_t(Ns);
  for (int i = 0; i < Ns; ++i) {
    std::complex<double> acc = 0.0;
    for (int k = 0; k < Ns; ++k)
      acc += coef[k] * std::exp(std::complex<double>(0.0, 2.0 * kPi * k * i / Ns));
    base_t[i] = acc.real();
  }
  Vec out(grid.size());
  for (int i = 0; i < Ns; ++i)
    for (int j = 0; j < grid.Nv - 1; ++j)
      out[grid.idx(i, j)] = phi0(grid.v[j]) * base_t[i];
  return out;
}

std::vector<SemigroupErrorRow> semigroup_convergence(
    const CurveGeometry& curve, const std::vector<double>& eps_list,
    const std::vector<double>& t_list, int Ns, int Nv,
    const std::vector<Vec>& test_functions, const StepperConfig& cfg) {
  std::vector<SemigroupErrorRow> rows;
  for (double eps : eps_list) {
    const TubeGrid grid = build_grid(curve, Ns, Nv, eps);
    FormOperator H = assemble_H(grid);
    H = renormalize(H, RenormMode::Lambda0OverEps2, std::nullopt, grid.hv);
    for (double t : t_list) {
      double worst = 0.0;
      for (const Vec& f : test_functions) {
        const Vec a = evolve(H, f, t, cfg);
        const Vec b = limit_semigroup(grid, f, t);
        const Vec d = a - b;
        worst = std::max(worst, std::sqrt(d.dot(grid.w_sa.cwiseProduct(d))));
      }
      rows.push_back({eps, t, worst});
    }
  }
  return rows;
}

std::vector<double> ultracontractive_curve(const FormOperator& form,
                                           const std::vector<double>& t_list,
                                           double alpha,
                                           const std::vector<int>& probes,
                                           const StepperConfig& cfg) {
  std::vector<double> norms(t_list.size(), 0.0);
  for (int p : probes) {
    const auto cols = kernel_columns(form, p, t_list, cfg);
    for (size_t i = 0; i < t_list.size(); ++i) {
      const Vec& K = cols[i].values;
      const double nrm = std::sqrt(K.dot(form.mass.cwiseProduct(K)));
      norms[i] = std::max(norms[i], nrm);
    }
  }
  for (size_t i = 0; i < t_list.size(); ++i)
    norms[i] *= std::exp(-0.5 * t_list[i] * alpha);
  return norms;
}

double ultracontractive_norm(const FormOperator& form, double t, double alpha,
                             const std::vector<int>& probes,
                             const StepperConfig& cfg) {
  return ultracontractive_curve(form, {t}, alpha, probes, cfg)[0];
}

MarkovReport markov_checks(const FormOperator& form, double t, int trials,
                           unsigned long long seed) {
  MarkovReport rep;
  rep.trials = trials;
  StepperConfig cfg;
  cfg.scheme = Scheme::BackwardEuler;
  const int n = form.size();
  for (int trial = 0; trial < trials; ++trial) {
    RngStream rng(seed, trial);
    Vec f(n);
    if (trial % 2 == 0) {
      for (int i = 0; i < n; ++i) f[i] = rng.uniform();
      const Vec g = evolve(form, f, t, cfg);
      const double mn = g.minCoeff();
      if (mn < -1e-10) ++rep.positivity_violations;
      rep.worst_negative = std::min(rep.worst_negative, mn);
    } else {
      for (int i = 0; i < n; ++i) f[i] = 2.0 * rng.uniform() - 1.0;
      const Vec g = evolve(form, f, t, cfg);
      const double excess = g.cwiseAbs().maxCoeff() - f.cwiseAbs().maxCoeff();
      if (excess > 1e-10 * f.cwiseAbs().maxCoeff()) ++rep.contraction_violations;
      rep.worst_excess = std::max(rep.worst_excess, excess);
    }
  }
  return rep;
}

std::vector<int> stratified_sources(const TubeGrid& grid, int n) {
  std::vector<int> out;
  const int nvm1 = grid.Nv - 1;
  int nv_strata = std::max(1, std::min(nvm1, n / 8));
  int ns_strata = std::max(1, (n + nv_strata - 1) / nv_strata);
  const int j_mid = grid.Nv / 2 - 1;  // v ~ 0
  for (int a = 0; a < ns_strata && static_cast<int>(out.size()) < n; ++a) {
    const int i = static_cast<int>((a + 0.5) * grid.Ns / ns_strata) % grid.Ns;
    for (int b = 0; b < nv_strata && static_cast<int>(out.size()) < n; ++b) {
      int j = static_cast<int>((b + 0.5) * nvm1 / nv_strata);
      if (b == nv_strata / 2) j = j_mid;  // always cover the fiber center
      out.push_back(grid.idx(i, std::clamp(j, 0, nvm1 - 1)));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

// Track, over a stream of samples (log_ratio, x), the per-parameter maxima of
// log_ratio + x / b over a grid of candidate exponents b.
struct ExponentFitter {
  std::vector<double> b_grid;
  std::vector<double> logC;
  explicit ExponentFitter(std::vector<double> grid)
      : b_grid(std::move(grid)), logC(b_grid.size(), -1e300) {}
  void add(double log_ratio, double x) {
    for (size_t i = 0; i < b_grid.size(); ++i)
      logC[i] = std::max(logC[i], log_ratio + x / b_grid[i]);
  }
  // Smallest b whose required C is within 2% (in log) of the flattened tail.
  std::pair<double, double> pick() const {
    const double tail = logC.back();
    for (size_t i = 0; i < b_grid.size(); ++i)
      if (logC[i] <= tail + std::log(1.02)) return {b_grid[i], std::exp(logC[i])};
    return {b_grid.back(), std::exp(tail)};
  }
};

std::vector<double> smoothed_base_distance(const CurveGeometry& curve, int Ns,
                                           int n_modes) {
  const double L = curve.total_length();
  const double hs = L / Ns;
  std::vector<double> h(Ns);
  for (int i = 0; i < Ns; ++i) h[i] = curve.geodesic_distance(i * hs, 0.0);
  // Fourier truncation: keep the first n_modes harmonics.
  std::vector<double> out(Ns, 0.0);
  for (int k = 0; k <= n_modes; ++k) {
    double ac = 0.0, as = 0.0;
    for (int i = 0; i < Ns; ++i) {
      const double ang = 2.0 * kPi * k * i / Ns;
      ac += h[i] * std::cos(ang);
      as += h[i] * std::sin(ang);
    }
    const double scale = (k == 0) ? 1.0 / Ns : 2.0 / Ns;
    for (int i = 0; i < Ns; ++i) {
      const double ang = 2.0 * kPi * k * i / Ns;
      out[i] += scale * (ac * std::cos(ang) + as * std::sin(ang));
    }
  }
  return out;
}

}  // namespace

SubgaussReport subgaussian_verify(const CurveGeometry& curve,
                                  const std::vector<double>& eps_list,
                                  const std::vector<double>& t_list, int Ns,
                                  int Nv, int n_sources,
                                  const StepperConfig& cfg) {
  if (eps_list.empty() || t_list.empty())
    throw std::invalid_argument("subgaussian_verify: empty sweep");
  const double m_exp = 2.5;  // t^{-(m+3)/2} with m = 2
  SubgaussReport rep;
  rep.fit.t_min = t_list.front();
  rep.fit.t_max = t_list.back();
  rep.fit.fit_eps = eps_list.front();

  std::vector<double> b_grid;
  for (double b = 0.5; b <= 4.0 + 1e-9; b += 0.05) b_grid.push_back(b);
  std::vector<double> k_grid;
  for (double k = 1.01; k <= 6.0 + 1e-9; k += 0.05) k_grid.push_back(k);
  ExponentFitter fit_d(b_grid), fit_h(k_grid);

  bool fitted = false;
  double C = 0.0, B = 0.0, Ch = 0.0, kh = 0.0;
  for (double eps : eps_list) {
    const TubeGrid grid = build_grid(curve, Ns, Nv, eps);
    FormOperator H = assemble_H(grid);
    H = renormalize(H, RenormMode::Lambda0OverEps2, std::nullopt, grid.hv);
    const EigenPair gs = ground_state(H, {}, &grid);
    const std::vector<int> sources = stratified_sources(grid, n_sources);

    // Smoothed basic function, rescaled so ||d hbar||_eps <= 1 on this grid.
    const std::vector<double> h_base = smoothed_base_distance(curve, Ns, 8);
    Vec hbar(grid.size());
    for (int i = 0; i < grid.Ns; ++i)
      for (int j = 0; j < grid.Nv - 1; ++j) hbar[grid.idx(i, j)] = h_base[i];
    const double gmax = grad_norm_eps(grid, hbar).maxCoeff();
    if (gmax > 1.0) hbar /= gmax;

    // March all sources through shared propagators, one t at a time.
    const SpMat A0 = H.renormalized_stiffness();
    std::vector<Vec> cols(sources.size());
    for (size_t s = 0; s < sources.size(); ++s) {
      cols[s] = Vec::Zero(grid.size());
      cols[s][sources[s]] = 1.0 / H.mass[sources[s]];
    }
    double t_prev = 0.0;
    ExponentFitter loc_d(b_grid), loc_h(k_grid);
    double worst_here = -1e300;
    for (double t : t_list) {
      StepperConfig c = cfg;
      c.start_damping = (t_prev == 0.0) ? std::max(cfg.start_damping, 4) : 0;
      {
        const int n_steps = step_count(t - t_prev, c);
        const double dt = (t - t_prev) / n_steps;
        Propagator prop(A0, H.mass, dt);
        for (auto& col : cols) {
          int damped = std::min(c.start_damping, n_steps);
          for (int q = 0; q < 2 * damped; ++q) col = prop.be_half_step(col);
          for (int q = damped; q < n_steps; ++q) col = prop.cn_step(col);
        }
      }
      t_prev = t;
      const double tfac = m_exp * std::log(t);
      for (size_t s = 0; s < sources.size(); ++s) {
        const int src = sources[s];
        const int src_i = src / (grid.Nv - 1);
        for (int j = 0; j < grid.size(); ++j) {
          const double K = cols[s][j];
          if (!(K > 1e-290)) continue;
          const double lr =
              std::log(K) + tfac - std::log(gs.phi[src] * gs.phi[j]);
          const int tgt_i = j / (grid.Nv - 1);
          const double d = curve.geodesic_distance(grid.s[src_i], grid.s[tgt_i]);
          const double xd = d * d / (4.0 * t);
          const double dh = hbar[src] - hbar[j];
          const double xh = dh * dh / (4.0 * t);
          if (!fitted) {
            loc_d.add(lr, xd);
            loc_h.add(lr, xh);
          } else {
            const double bound_log = std::log(C) - xd / B;
            const double slack = lr - bound_log;  // log(K.../bound)
            if (slack > std::log1p(1e-8)) {
              ++rep.verify_violations;
            }
            if (slack > worst_here) worst_here = slack;
            const double bh = std::log(Ch) - xh / kh;
            if (lr - bh > std::log1p(1e-8)) ++rep.verify_violations;
          }
        }
      }
    }
    if (!fitted) {
      std::tie(B, C) = loc_d.pick();
      std::tie(kh, Ch) = loc_h.pick();
      // Freeze the prefactors with a small multiplicative headroom: the claim
      // is a uniform-in-eps bound, not minimality of the constant at the fit
      // resolution, and the fitted level drifts by O(eps) between members of
      // the family.
      C *= 1.05;
      Ch *= 1.05;
      rep.fit.B = B;
      rep.fit.C = C;
      rep.fit_h.k = kh;
      rep.fit_h.C = Ch;
      rep.fit_h.B = kh;
      rep.fit_h.t_min = t_list.front();
      rep.fit_h.t_max = t_list.back();
      rep.fit_h.fit_eps = eps;
      fitted = true;
    } else if (worst_here > -1e299) {
      const double rel = std::expm1(worst_here);
      if (rel > rep.worst_slack) {
        rep.worst_slack = rel;
        rep.worst_eps = eps;
      }
    }
  }
  rep.fit.violations = rep.verify_violations;
  rep.fit.max_rel_slack = rep.worst_slack;
  return rep;
}

}  // namespace tubeflow
