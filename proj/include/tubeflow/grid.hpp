#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <optional>
#include <vector>

#include "tubeflow/geometry.hpp"

namespace tubeflow {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// Tensor grid on the unit tube L(1): N_s periodic arc-length nodes, N_v - 1
// interior Dirichlet fiber nodes v_j = -1 + j h_v.  Node index = i*(N_v-1)+j.
struct TubeGrid {
  const CurveGeometry* curve = nullptr;
  int Ns = 0, Nv = 0;
  double eps = 0.0;
  double hs = 0.0, hv = 0.0;
  std::vector<double> s;  // size Ns
  std::vector<double> v;  // size Nv-1 (interior)
  Vec rho;                // rho(s_i, eps v_j) at nodes
  Vec w_sa;               // Sasaki quadrature weight h_s h_v
  Vec w_mu;               // induced-volume weight h_s h_v eps rho

  int size() const { return Ns * (Nv - 1); }
  int idx(int i, int j) const { return ((i % Ns + Ns) % Ns) * (Nv - 1) + j; }
};

TubeGrid build_grid(const CurveGeometry& curve, int Ns, int Nv, double eps);

// One edge of the assembled form: contributes w * (ca f_a - cb f_b)^2 to the
// quadratic form.  b < 0 marks a Dirichlet boundary edge (f_b = 0, cb = 0).
struct FormEdge {
  int a = 0, b = -1;
  double w = 0.0;
  double ca = 1.0, cb = 1.0;
};

enum class RenormMode { None, Lambda0OverEps2, LambdaEps };

// Which discretization route the assembly uses.
//  Transported: difference the conjugated function Sigma_eps f (conjugation
//    factors (eps rho)^{-1/2} at the nodes) against the physical edge weights.
//  Coefficient: difference f directly against the unit-tube metric
//    coefficients rho^{-2} (arc direction) and eps^{-2} (fiber direction).
// Both discretize the same continuum form; they agree to O(h^2).
enum class AssemblyRoute { Transported, Coefficient };

// Sparse symmetric stiffness + diagonal mass pair for a quadratic form.
// The renormalized operator is stiffness - renorm_const * diag(mass).
struct FormOperator {
  SpMat stiffness;
  Vec mass;
  double epsilon = 0.0;
  RenormMode renorm = RenormMode::None;
  double renorm_const = 0.0;
  std::vector<FormEdge> edges;  // edge decomposition of the gradient part
  Vec pot_diag;                 // diagonal potential contribution (already in stiffness)

  int size() const { return static_cast<int>(mass.size()); }
  // Bilinear form of the renormalized operator: f^T (A - c M) g.
  double blin(const Vec& f, const Vec& g) const;
  double q(const Vec& f) const { return blin(f, f); }
  // Residual-friendly matrix application: (A - c M) f.
  Vec apply(const Vec& f) const;
  // Materialized renormalized stiffness A - c M.
  SpMat renormalized_stiffness() const;
};

// Discrete fiber ground energy of the 1-D Dirichlet second-difference stencil
// on (-1,1) with spacing hv; tends to pi^2/4 at second order.
double lambda0_discrete(double hv);

// The quadratic form on L^2(L(1), mu_Sa).  include_potential selects the
// operator: true (default) gives H_eps (unitarily equivalent to the
// physical-tube operator assembled by assemble_direct with its potential);
// false gives the transported generator of Brownian motion absorbed at the
// tube boundary.  The two differ by the potential term int U f^2 dmu_Sa
// (exact Liouville-transform identity), applied with the sign appropriate
// to the chosen route.
FormOperator assemble_H(const TubeGrid& grid, bool include_potential = true,
                        AssemblyRoute route = AssemblyRoute::Transported);

// Physical-tube assembly of the same operator in the mu inner product on
// L(eps); generalized spectrum identical to assemble_H (Transported route)
// up to round-off.
FormOperator assemble_direct(const CurveGeometry& curve, double eps, int Ns,
                             int Nv, bool include_potential = true);

// The eps-free Sasaki form on the unit tube (flat product metric), used by
// the Hardy inequality.
FormOperator assemble_sasaki(const TubeGrid& grid);

// 1-D periodic second-difference Laplacian on L with mass h_s I.
FormOperator assemble_laplace_L(const CurveGeometry& curve, int Ns);

// Record a renormalization constant: lambda0_discrete(hv)/eps^2 or a supplied
// ground eigenvalue lambda_eps.
FormOperator renormalize(const FormOperator& form, RenormMode mode,
                         std::optional<double> lambda_eps = std::nullopt,
                         std::optional<double> hv = std::nullopt);

// Fiber ground mode phi_0(v) = cos(pi v / 2) (unit L^2(-1,1) norm).
double phi0(double v);

// Fiber projection: f_b(s_i) = sum_j f(i,j) phi0(v_j) h_v, and the embedded
// projection E_0 f = phi0 * (f_b o pi).
struct Projection {
  Vec base;      // f_b, size Ns
  Vec embedded;  // E_0 f, size Ns*(Nv-1)
};
Projection project_E0(const TubeGrid& grid, const Vec& f);

// Pointwise gradient norm ||dg||_eps consistent with the Coefficient-route
// quadrature: sum_nodes ||dg||^2 w_sa equals the Coefficient form exactly.
Vec grad_norm_eps(const TubeGrid& grid, const Vec& g);

// Weighted bilinear form  sum_edges w (ca phi_a)(cb phi_b) (f_a-f_b)(g_a-g_b)
// over the edge decomposition of `form` - the discrete realization of
// int phi^2 df ^ #_eps dg.
double weighted_form(const FormOperator& form, const Vec& phi, const Vec& f,
                     const Vec& g);

}  // namespace tubeflow
