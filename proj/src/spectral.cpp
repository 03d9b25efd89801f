#include "tubeflow/spectral.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

namespace tubeflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

double m_norm(const Vec& x, const Vec& mass) {
  return std::sqrt(x.dot(mass.cwiseProduct(x)));
}

void m_orthogonalize(Vec& x, const std::vector<Vec>& deflate, const Vec& mass) {
  for (const Vec& d : deflate) x -= d * d.dot(mass.cwiseProduct(x));
}

// One eigenpair of (A0, M) below/around the start vector's Rayleigh quotient,
// M-orthogonal to `deflate` (assumed M-orthonormal).
EigenPair solve_pair(const SpMat& A0, const Vec& mass, Vec x,
                     const std::vector<Vec>& deflate, const SpectralConfig& cfg) {
  const int n = static_cast<int>(mass.size());
  SpMat M(n, n);
  {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(n);
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, mass[i]);
    M.setFromTriplets(t.begin(), t.end());
  }
  m_orthogonalize(x, deflate, mass);
  x /= m_norm(x, mass);
  double rq = x.dot(A0 * x);
  const double scale = 1.0 + std::abs(rq);
  // Start from a Gershgorin lower bound of the generalized spectrum so the
  // first factorization targets the bottom of the spectrum regardless of the
  // start vector's Rayleigh quotient.
  double gersh = 1e300;
  for (int i = 0; i < n; ++i) {
    double offsum = 0.0;
    double diag = 0.0;
    for (SpMat::InnerIterator it(A0, i); it; ++it) {
      if (it.row() == i)
        diag = it.value();
      else
        offsum += std::abs(it.value());
    }
    gersh = std::min(gersh, (diag - offsum) / mass[i]);
  }
  double sigma = gersh - 0.01 * (1.0 + std::abs(gersh));
  int total_it = 0;
  Eigen::SimplicialLDLT<SpMat> solver;
  for (int outer = 0; outer < 60; ++outer) {
    SpMat shifted = A0 - sigma * M;
    solver.compute(shifted);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("ground_state: factorization failed");
    for (int inner = 0; inner < 6; ++inner) {
      if (++total_it > cfg.max_iterations)
        throw std::runtime_error("ground_state: iteration limit exceeded");
      Vec y = solver.solve(mass.cwiseProduct(x));
      m_orthogonalize(y, deflate, mass);
      const double nrm = m_norm(y, mass);
      if (!(nrm > 0.0) || !std::isfinite(nrm))
        throw std::runtime_error("ground_state: iteration degenerated");
      x = y / nrm;
      rq = x.dot(A0 * x);
      const Vec r = A0 * x - rq * mass.cwiseProduct(x);
      const double res = r.norm() / m_norm(x, mass) / std::max(1.0, std::abs(rq));
      if (res <= cfg.tolerance) {
        // Fix the sign so the mass-weighted mean is positive.
        if (x.dot(mass) < 0.0) x = -x;
        EigenPair p;
        p.lambda = rq;
        p.phi = x;
        p.residual = res;
        return p;
      }
    }
    // Rayleigh shift update; nudge below to keep the factorization away from
    // exact singularity.
    sigma = rq - 1e-8 * scale;
  }
  throw std::runtime_error("ground_state: did not converge");
}

Vec start_vector(const FormOperator& form, const TubeGrid* grid, int which) {
  const int n = form.size();
  Vec x = Vec::Ones(n);
  if (grid && n == grid->size()) {
    for (int i = 0; i < grid->Ns; ++i)
      for (int j = 0; j < grid->Nv - 1; ++j) {
        double val = phi0(grid->v[j]);
        if (which == 1) val *= std::cos(2.0 * kPi * grid->s[i] / grid->curve->total_length());
        x[grid->idx(i, j)] = val;
      }
  } else if (which == 1) {
    for (int i = 0; i < n; ++i) x[i] = std::cos(2.0 * kPi * i / n);
  }
  // Deterministic perturbation to avoid accidental orthogonality.
  for (int i = 0; i < n; ++i) x[i] += 1e-8 * std::sin(0.7 * i + 0.3);
  return x;
}

}  // namespace

EigenPair ground_state(const FormOperator& form, const SpectralConfig& cfg,
                       const TubeGrid* grid) {
  const SpMat A0 = form.renormalized_stiffness();
  EigenPair p = solve_pair(A0, form.mass, start_vector(form, grid, 0), {}, cfg);
  const double floor = p.phi.minCoeff();
  if (floor < -1e-9)
    throw std::runtime_error("ground_state: negative interior values beyond tolerance");
  return p;
}

std::vector<EigenPair> lowest_eigenpairs(const FormOperator& form, int k,
                                         const SpectralConfig& cfg,
                                         const TubeGrid* grid) {
  const SpMat A0 = form.renormalized_stiffness();
  std::vector<EigenPair> out;
  std::vector<Vec> deflate;
  for (int j = 0; j < k; ++j) {
    EigenPair p = solve_pair(A0, form.mass, start_vector(form, grid, j), deflate, cfg);
    deflate.push_back(p.phi);
    out.push_back(std::move(p));
  }
  return out;
}

EigenPair flat_ball_mode(int Nv) {
  if (Nv < 4) throw std::invalid_argument("flat_ball_mode: Nv too small");
  EigenPair p;
  p.lambda = kPi * kPi / 4.0;
  p.phi = Vec(Nv - 1);
  const double hv = 2.0 / Nv;
  for (int j = 1; j < Nv; ++j) p.phi[j - 1] = phi0(-1.0 + j * hv);
  p.residual = 0.0;
  return p;
}

double base_schrodinger_ground(const CurveGeometry& curve, int Ns, double c_pot) {
  FormOperator lap = assemble_laplace_L(curve, Ns);
  const double hs = curve.total_length() / Ns;
  SpMat A = lap.stiffness;
  for (int i = 0; i < Ns; ++i) {
    const double kap = curve.kappa(i * hs);
    A.coeffRef(i, i) += c_pot * kap * kap * hs;
  }
  FormOperator op;
  op.stiffness = A;
  op.mass = lap.mass;
  op.epsilon = 0.0;
  SpectralConfig cfg;
  return ground_state(op, cfg).lambda;
}

std::vector<GapRow> eigen_gap_sweep(const CurveGeometry& curve,
                                    const std::vector<double>& eps_list, int Ns,
                                    int Nv, const SpectralConfig& cfg) {
  std::vector<GapRow> rows;
  for (double eps : eps_list) {
    const TubeGrid grid = build_grid(curve, Ns, Nv, eps);
    const double l0 = lambda0_discrete(grid.hv) / (eps * eps);
    const FormOperator abs_op = assemble_H(grid, /*include_potential=*/false);
    const FormOperator h_op = assemble_H(grid, /*include_potential=*/true);
    const EigenPair pa = ground_state(abs_op, cfg, &grid);
    const EigenPair ph = ground_state(h_op, cfg, &grid);
    rows.push_back({eps, pa.lambda, pa.lambda - l0, ph.lambda, ph.lambda - l0,
                    std::max(pa.residual, ph.residual)});
  }
  return rows;
}

Envelope envelope_fit(const EigenPair& eigen, const TubeGrid& grid) {
  Envelope env{1e300, 0.0};
  for (int i = 0; i < grid.Ns; ++i)
    for (int j = 0; j < grid.Nv - 1; ++j) {
      const double ratio = eigen.phi[grid.idx(i, j)] / boundary_distance(grid.v[j]);
      env.c = std::min(env.c, ratio);
      env.C = std::max(env.C, ratio);
    }
  return env;
}

std::vector<ConvergenceRow> ground_state_convergence(
    const CurveGeometry& curve, const std::vector<double>& eps_list, int Ns,
    int Nv, const SpectralConfig& cfg) {
  std::vector<ConvergenceRow> rows;
  const double isqrtL = 1.0 / std::sqrt(curve.total_length());
  for (double eps : eps_list) {
    const TubeGrid grid = build_grid(curve, Ns, Nv, eps);
    const FormOperator h_op = assemble_H(grid);
    const EigenPair p = ground_state(h_op, cfg, &grid);
    Vec target(grid.size());
    for (int i = 0; i < grid.Ns; ++i)
      for (int j = 0; j < grid.Nv - 1; ++j)
        target[grid.idx(i, j)] = phi0(grid.v[j]) * isqrtL;
    const Vec diff = p.phi - target;
    const double l2 = std::sqrt(diff.dot(grid.w_sa.cwiseProduct(diff)));
    const FormOperator sa = assemble_sasaki(grid);
    const double h1 = std::sqrt(std::max(0.0, sa.q(diff)));
    rows.push_back({eps, l2, h1});
  }
  return rows;
}

}  // namespace tubeflow
