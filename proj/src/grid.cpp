#include "tubeflow/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace tubeflow {

namespace {
constexpr double kPi = 3.14159265358979323846;

struct Assembler {
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<FormEdge> edges;

  void add_edge(int a, int b, double w, double ca, double cb) {
    edges.push_back({a, b, w, ca, cb});
    trip.emplace_back(a, a, w * ca * ca);
    trip.emplace_back(b, b, w * cb * cb);
    trip.emplace_back(a, b, -w * ca * cb);
    trip.emplace_back(b, a, -w * ca * cb);
  }
  void add_boundary_edge(int a, double w, double ca) {
    edges.push_back({a, -1, w, ca, 0.0});
    trip.emplace_back(a, a, w * ca * ca);
  }
  void add_diag(int a, double val) { trip.emplace_back(a, a, val); }

  SpMat finish(int n) {
    SpMat A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
  }
};

}  // namespace

double phi0(double v) { return std::cos(0.5 * kPi * v); }

double lambda0_discrete(double hv) {
  return (2.0 / (hv * hv)) * (1.0 - std::cos(0.5 * kPi * hv));
}

TubeGrid build_grid(const CurveGeometry& curve, int Ns, int Nv, double eps) {
  if (Ns < 16 || Nv < 8) throw std::invalid_argument("build_grid: grid too coarse");
  if (!(eps > 0.0) || eps * curve.max_curvature() >= 1.0)
    throw std::invalid_argument("build_grid: eps violates chart validity");
  TubeGrid g;
  g.curve = &curve;
  g.Ns = Ns;
  g.Nv = Nv;
  g.eps = eps;
  g.hs = curve.total_length() / Ns;
  g.hv = 2.0 / Nv;
  g.s.resize(Ns);
  for (int i = 0; i < Ns; ++i) g.s[i] = i * g.hs;
  g.v.resize(Nv - 1);
  for (int j = 1; j < Nv; ++j) g.v[j - 1] = -1.0 + j * g.hv;
  const int N = g.size();
  g.rho.resize(N);
  g.w_sa.resize(N);
  g.w_mu.resize(N);
  for (int i = 0; i < Ns; ++i) {
    for (int j = 0; j < Nv - 1; ++j) {
      const double rho = curve.density_rho(g.s[i], eps * g.v[j]);
      if (!(rho > 0.0)) throw std::invalid_argument("build_grid: rho <= 0 at a node");
      const int k = g.idx(i, j);
      g.rho[k] = rho;
      g.w_sa[k] = g.hs * g.hv;
      g.w_mu[k] = g.hs * g.hv * eps * rho;
    }
  }
  return g;
}

double FormOperator::blin(const Vec& f, const Vec& g) const {
  double val = f.dot(stiffness * g);
  if (renorm_const != 0.0) val -= renorm_const * f.dot(mass.cwiseProduct(g));
  return val;
}

Vec FormOperator::apply(const Vec& f) const {
  Vec r = stiffness * f;
  if (renorm_const != 0.0) r -= renorm_const * mass.cwiseProduct(f);
  return r;
}

SpMat FormOperator::renormalized_stiffness() const {
  if (renorm_const == 0.0) return stiffness;
  SpMat A = stiffness;
  SpMat M(size(), size());
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < size(); ++i) t.emplace_back(i, i, mass[i]);
  M.setFromTriplets(t.begin(), t.end());
  return A - renorm_const * M;
}

FormOperator assemble_H(const TubeGrid& g, bool include_potential,
                        AssemblyRoute route) {
  const CurveGeometry& c = *g.curve;
  const double eps = g.eps;
  const int N = g.size();
  Assembler as;
  const bool transported = (route == AssemblyRoute::Transported);
  auto conj = [&](int k) {
    return transported ? 1.0 / std::sqrt(eps * g.rho[k]) : 1.0;
  };
  for (int i = 0; i < g.Ns; ++i) {
    const double smid = g.s[i] + 0.5 * g.hs;
    for (int j = 0; j < g.Nv - 1; ++j) {
      const int a = g.idx(i, j);
      // Arc-direction edge to (i+1, j); rho at the edge midpoint.
      {
        const double rm = c.density_rho(smid, eps * g.v[j]);
        const double w = transported ? (eps * g.hv / g.hs) / rm
                                     : (g.hv / g.hs) / (rm * rm);
        const int b = g.idx(i + 1, j);
        as.add_edge(a, b, w, conj(a), conj(b));
      }
      // Fiber-direction edge to (i, j+1), or the Dirichlet boundary.
      {
        const double vm = g.v[j] + 0.5 * g.hv;
        const double rm = c.density_rho(g.s[i], eps * vm);
        const double w = transported ? rm * g.hs / (eps * g.hv)
                                     : (g.hs / g.hv) / (eps * eps);
        if (j < g.Nv - 2) {
          as.add_edge(a, g.idx(i, j + 1), w, conj(a), conj(g.idx(i, j + 1)));
        } else {
          as.add_boundary_edge(a, w, conj(a));
        }
      }
      // Boundary edge at the lower fiber end.
      if (j == 0) {
        const double vm = g.v[0] - 0.5 * g.hv;
        const double rm = c.density_rho(g.s[i], eps * vm);
        const double w = transported ? rm * g.hs / (eps * g.hv)
                                     : (g.hs / g.hv) / (eps * eps);
        as.add_boundary_edge(a, w, conj(a));
      }
    }
  }
  FormOperator f;
  f.pot_diag = Vec::Zero(N);
  // The Transported route discretizes the pure Dirichlet energy of Sigma f
  // (the absorbed-Brownian-motion generator); H_eps adds + int U f^2 dmu_Sa.
  // The Coefficient route discretizes H_eps directly; the absorbed generator
  // subtracts the same potential (exact Liouville-transform identity).
  const double sign = transported ? (include_potential ? 1.0 : 0.0)
                                  : (include_potential ? 0.0 : -1.0);
  if (sign != 0.0) {
    for (int i = 0; i < g.Ns; ++i)
      for (int j = 0; j < g.Nv - 1; ++j) {
        const int k = g.idx(i, j);
        const double u = c.potential_U(g.s[i], eps * g.v[j]);
        f.pot_diag[k] = sign * u * g.w_sa[k];
        as.add_diag(k, f.pot_diag[k]);
      }
  }
  f.stiffness = as.finish(N);
  f.mass = g.w_sa;
  f.epsilon = eps;
  f.edges = std::move(as.edges);
  return f;
}

FormOperator assemble_direct(const CurveGeometry& c, double eps, int Ns, int Nv,
                             bool include_potential) {
  const TubeGrid g = build_grid(c, Ns, Nv, eps);
  const int N = g.size();
  Assembler as;
  for (int i = 0; i < g.Ns; ++i) {
    const double smid = g.s[i] + 0.5 * g.hs;
    for (int j = 0; j < g.Nv - 1; ++j) {
      const int a = g.idx(i, j);
      {
        const double rm = c.density_rho(smid, eps * g.v[j]);
        as.add_edge(a, g.idx(i + 1, j), (eps * g.hv / g.hs) / rm, 1.0, 1.0);
      }
      {
        const double vm = g.v[j] + 0.5 * g.hv;
        const double rm = c.density_rho(g.s[i], eps * vm);
        const double w = rm * g.hs / (eps * g.hv);
        if (j < g.Nv - 2)
          as.add_edge(a, g.idx(i, j + 1), w, 1.0, 1.0);
        else
          as.add_boundary_edge(a, w, 1.0);
      }
      if (j == 0) {
        const double vm = g.v[0] - 0.5 * g.hv;
        const double rm = c.density_rho(g.s[i], eps * vm);
        as.add_boundary_edge(a, rm * g.hs / (eps * g.hv), 1.0);
      }
    }
  }
  FormOperator f;
  f.pot_diag = Vec::Zero(N);
  if (include_potential) {
    for (int i = 0; i < g.Ns; ++i)
      for (int j = 0; j < g.Nv - 1; ++j) {
        const int k = g.idx(i, j);
        f.pot_diag[k] = c.potential_U(g.s[i], eps * g.v[j]) * g.w_mu[k];
        as.add_diag(k, f.pot_diag[k]);
      }
  }
  f.stiffness = as.finish(N);
  f.mass = g.w_mu;
  f.epsilon = eps;
  f.edges = std::move(as.edges);
  return f;
}

FormOperator assemble_sasaki(const TubeGrid& g) {
  const int N = g.size();
  Assembler as;
  for (int i = 0; i < g.Ns; ++i) {
    for (int j = 0; j < g.Nv - 1; ++j) {
      const int a = g.idx(i, j);
      as.add_edge(a, g.idx(i + 1, j), g.hv / g.hs, 1.0, 1.0);
      if (j < g.Nv - 2)
        as.add_edge(a, g.idx(i, j + 1), g.hs / g.hv, 1.0, 1.0);
      else
        as.add_boundary_edge(a, g.hs / g.hv, 1.0);
      if (j == 0) as.add_boundary_edge(a, g.hs / g.hv, 1.0);
    }
  }
  FormOperator f;
  f.stiffness = as.finish(N);
  f.mass = g.w_sa;
  f.epsilon = 1.0;
  f.edges = std::move(as.edges);
  f.pot_diag = Vec::Zero(N);
  return f;
}

FormOperator assemble_laplace_L(const CurveGeometry& c, int Ns) {
  if (Ns < 16) throw std::invalid_argument("assemble_laplace_L: Ns too small");
  const double hs = c.total_length() / Ns;
  Assembler as;
  for (int i = 0; i < Ns; ++i) as.add_edge(i, (i + 1) % Ns, 1.0 / hs, 1.0, 1.0);
  FormOperator f;
  f.stiffness = as.finish(Ns);
  f.mass = Vec::Constant(Ns, hs);
  f.epsilon = 0.0;
  f.edges = std::move(as.edges);
  f.pot_diag = Vec::Zero(Ns);
  return f;
}

FormOperator renormalize(const FormOperator& form, RenormMode mode,
                         std::optional<double> lambda_eps,
                         std::optional<double> hv) {
  FormOperator f = form;
  f.renorm = mode;
  switch (mode) {
    case RenormMode::None:
      f.renorm_const = 0.0;
      break;
    case RenormMode::Lambda0OverEps2: {
      if (!hv) throw std::invalid_argument("renormalize: lambda0 mode needs hv");
      if (!(f.epsilon > 0.0))
        throw std::invalid_argument("renormalize: form has no eps");
      f.renorm_const = lambda0_discrete(*hv) / (f.epsilon * f.epsilon);
      break;
    }
    case RenormMode::LambdaEps:
      if (!lambda_eps)
        throw std::invalid_argument("renormalize: lambda_eps mode needs a value");
      f.renorm_const = *lambda_eps;
      break;
  }
  return f;
}

Projection project_E0(const TubeGrid& g, const Vec& f) {
  Projection p;
  p.base = Vec::Zero(g.Ns);
  p.embedded = Vec::Zero(g.size());
  for (int i = 0; i < g.Ns; ++i) {
    double acc = 0.0;
    for (int j = 0; j < g.Nv - 1; ++j) acc += f[g.idx(i, j)] * phi0(g.v[j]) * g.hv;
    p.base[i] = acc;
    for (int j = 0; j < g.Nv - 1; ++j) p.embedded[g.idx(i, j)] = phi0(g.v[j]) * acc;
  }
  return p;
}

Vec grad_norm_eps(const TubeGrid& g, const Vec& f) {
  const CurveGeometry& c = *g.curve;
  const double eps = g.eps;
  Vec acc = Vec::Zero(g.size());
  for (int i = 0; i < g.Ns; ++i) {
    const double smid = g.s[i] + 0.5 * g.hs;
    for (int j = 0; j < g.Nv - 1; ++j) {
      const int a = g.idx(i, j);
      {
        const double rm = c.density_rho(smid, eps * g.v[j]);
        const int b = g.idx(i + 1, j);
        const double d = f[a] - f[b];
        const double e = (g.hv / g.hs) / (rm * rm) * d * d;
        acc[a] += 0.5 * e;
        acc[b] += 0.5 * e;
      }
      const double wv = (g.hs / g.hv) / (eps * eps);
      if (j < g.Nv - 2) {
        const int b = g.idx(i, j + 1);
        const double d = f[a] - f[b];
        const double e = wv * d * d;
        acc[a] += 0.5 * e;
        acc[b] += 0.5 * e;
      } else {
        acc[a] += wv * f[a] * f[a];
      }
      if (j == 0) acc[a] += wv * f[a] * f[a];
    }
  }
  Vec out(g.size());
  for (int k = 0; k < g.size(); ++k) out[k] = std::sqrt(acc[k] / g.w_sa[k]);
  return out;
}

double weighted_form(const FormOperator& form, const Vec& phi, const Vec& f,
                     const Vec& g) {
  double acc = 0.0;
  for (const FormEdge& e : form.edges) {
    if (e.b < 0) continue;  // phi vanishes on the boundary
    const double pw = (e.ca * phi[e.a]) * (e.cb * phi[e.b]);
    acc += e.w * pw * (f[e.a] - f[e.b]) * (g[e.a] - g[e.b]);
  }
  return acc;
}

}  // namespace tubeflow
