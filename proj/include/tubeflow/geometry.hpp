#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tubeflow {

struct AmbientPoint {
  double x = 0.0;
  double y = 0.0;
};

// Fermi coordinate on the unit tube: arc length s in [0, Lambda), scaled fiber
// coordinate v in (-1, 1).  The physical normal offset is n = eps * v.
struct FermiCoordinate {
  double s = 0.0;
  double v = 0.0;
};

// Physical Fermi coordinate (s, n) returned by the closest-point projection.
struct PhysicalFermi {
  double s = 0.0;
  double n = 0.0;
};

enum class CurveKind { FlatCylinder, Circle, Ellipse };

// Closed arc-length-parametrized plane curve with two curvature derivatives,
// plus the tube geometry built on it: Fermi chart, density rho, the
// curvature-induced potential U, boundary distance, and geodesic distance.
//
// Normal convention: nu(s) is the inward normal of the (convex)
// counterclockwise-parametrized curve, nu = rot90(tangent) = (-t_y, t_x).
// The sign of the offset n follows nu.
class CurveGeometry {
public:
  static CurveGeometry make_circle(double R);
  static CurveGeometry make_flat_cylinder(double Lambda);
  static CurveGeometry make_ellipse(double a, double b, int N_quad = 4096);

  CurveKind kind() const { return kind_; }
  double total_length() const { return Lambda_; }
  double max_curvature() const { return kappa_max_; }

  // Wrap an arc-length parameter into [0, Lambda).
  double wrap(double s) const;

  AmbientPoint position(double s) const;      // gamma(s)
  AmbientPoint unit_tangent(double s) const;  // gamma'(s)
  AmbientPoint unit_normal(double s) const;   // nu(s), inward

  double kappa(double s) const;
  double dkappa(double s) const;   // d kappa / ds
  double ddkappa(double s) const;  // d^2 kappa / ds^2

  // gamma(s) + n nu(s).  Requires |n| * kappa_max < 1.
  AmbientPoint fermi_to_ambient(double s, double n) const;

  // Inverse Fermi chart by safeguarded Newton from a coarse-grid seed.
  // Throws std::runtime_error on non-convergence or out-of-reach points.
  PhysicalFermi closest_point_projection(const AmbientPoint& p) const;

  // rho(s, n) = 1 - n * kappa(s): Radon-Nikodym density d mu / d mu_Sa.
  double density_rho(double s, double n) const;

  // U = (kappa^2/4) rho^-2 + (n kappa''/2) rho^-3 + (5 n^2 kappa'^2/4) rho^-4.
  // Equals kappa^2/4 on the curve itself.
  double potential_U(double s, double n) const;

  // Geodesic distance on the closed curve: min(|s1-s2|, Lambda-|s1-s2|).
  double geodesic_distance(double s1, double s2) const;

  // Residual of the arc-length reparametrization (ellipse only; 0 otherwise).
  double reparam_residual() const { return reparam_residual_; }

private:
  CurveGeometry() = default;

  // Ellipse helpers: theta is the elliptic parameter of (a cos, b sin).
  double ellipse_speed(double theta) const;
  double theta_of_s(double s) const;
  double arc_from_theta(double theta0, double theta1) const;

  CurveKind kind_ = CurveKind::Circle;
  double Lambda_ = 0.0;
  double kappa_max_ = 0.0;
  double R_ = 0.0;  // circle radius
  double a_ = 0.0, b_ = 0.0;
  double reparam_residual_ = 0.0;

  // Arc-length table for the ellipse: theta_i uniform, s_i cumulative.
  std::vector<double> tab_theta_;
  std::vector<double> tab_s_;
};

// Distance to the boundary of the unit tube in the fiber coordinate.
inline double boundary_distance(double v) {
  return 1.0 - std::abs(v);
}

}  // namespace tubeflow
