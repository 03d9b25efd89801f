#include "tubeflow/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace tubeflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 5-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGLx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                            0.5384693101056831, 0.9061798459386640};
constexpr double kGLw[5] = {0.2369268850561891, 0.4786286704993665,
                            0.5688888888888889, 0.4786286704993665,
                            0.2369268850561891};

}  // namespace

double CurveGeometry::wrap(double s) const {
  double r = std::fmod(s, Lambda_);
  if (r < 0.0) r += Lambda_;
  return r;
}

CurveGeometry CurveGeometry::make_circle(double R) {
  if (!(R > 0.0)) throw std::invalid_argument("make_circle: R must be positive");
  CurveGeometry c;
  c.kind_ = CurveKind::Circle;
  c.R_ = R;
  c.Lambda_ = 2.0 * kPi * R;
  c.kappa_max_ = 1.0 / R;
  return c;
}

CurveGeometry CurveGeometry::make_flat_cylinder(double Lambda) {
  if (!(Lambda > 0.0))
    throw std::invalid_argument("make_flat_cylinder: Lambda must be positive");
  CurveGeometry c;
  c.kind_ = CurveKind::FlatCylinder;
  c.Lambda_ = Lambda;
  c.kappa_max_ = 0.0;
  return c;
}

double CurveGeometry::ellipse_speed(double theta) const {
  const double st = std::sin(theta), ct = std::cos(theta);
  return std::sqrt(a_ * a_ * st * st + b_ * b_ * ct * ct);
}

double CurveGeometry::arc_from_theta(double theta0, double theta1) const {
  const double mid = 0.5 * (theta0 + theta1);
  const double half = 0.5 * (theta1 - theta0);
  double acc = 0.0;
  for (int k = 0; k < 5; ++k) acc += kGLw[k] * ellipse_speed(mid + half * kGLx[k]);
  return acc * half;
}

CurveGeometry CurveGeometry::make_ellipse(double a, double b, int N_quad) {
  if (!(a >= b && b > 0.0))
    throw std::invalid_argument("make_ellipse: need a >= b > 0");
  if (N_quad < 16) throw std::invalid_argument("make_ellipse: N_quad too small");
  CurveGeometry c;
  c.kind_ = CurveKind::Ellipse;
  c.a_ = a;
  c.b_ = b;
  c.tab_theta_.resize(N_quad + 1);
  c.tab_s_.resize(N_quad + 1);
  const double dth = 2.0 * kPi / N_quad;
  c.tab_theta_[0] = 0.0;
  c.tab_s_[0] = 0.0;
  for (int i = 1; i <= N_quad; ++i) {
    c.tab_theta_[i] = i * dth;
    c.tab_s_[i] = c.tab_s_[i - 1] + c.arc_from_theta(c.tab_theta_[i - 1], c.tab_theta_[i]);
  }
  c.Lambda_ = c.tab_s_[N_quad];
  c.kappa_max_ = a / (b * b);
  // Residual of the inversion: check s(theta(s)) against s on a sample.
  double worst = 0.0;
  for (int k = 0; k < 257; ++k) {
    const double s = c.Lambda_ * k / 257.0;
    const double th = c.theta_of_s(s);
    // Integrate from the table node just below th.
    const int i = std::min<int>(N_quad - 1, static_cast<int>(th / dth));
    const double s_chk = c.tab_s_[i] + c.arc_from_theta(c.tab_theta_[i], th);
    worst = std::max(worst, std::abs(s_chk - s));
  }
  c.reparam_residual_ = worst;
  if (worst > 1e-10)
    throw std::runtime_error("make_ellipse: reparametrization residual " +
                             std::to_string(worst) + " exceeds 1e-10");
  return c;
}

double CurveGeometry::theta_of_s(double s) const {
  s = wrap(s);
  // Binary search for the bracketing table interval, then cubic Hermite
  // interpolation of theta(s) with exact slopes d theta/ds = 1/speed.
  const auto it = std::upper_bound(tab_s_.begin(), tab_s_.end(), s);
  int i = static_cast<int>(it - tab_s_.begin()) - 1;
  i = std::clamp(i, 0, static_cast<int>(tab_s_.size()) - 2);
  const double s0 = tab_s_[i], s1 = tab_s_[i + 1];
  const double th0 = tab_theta_[i], th1 = tab_theta_[i + 1];
  const double m0 = 1.0 / ellipse_speed(th0), m1 = 1.0 / ellipse_speed(th1);
  const double h = s1 - s0;
  const double t = (s - s0) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * th0 + (t3 - 2 * t2 + t) * h * m0 +
         (-2 * t3 + 3 * t2) * th1 + (t3 - t2) * h * m1;
}

AmbientPoint CurveGeometry::position(double s) const {
  s = wrap(s);
  switch (kind_) {
    case CurveKind::FlatCylinder:
      return {s, 0.0};
    case CurveKind::Circle:
      return {R_ * std::cos(s / R_), R_ * std::sin(s / R_)};
    case CurveKind::Ellipse: {
      const double th = theta_of_s(s);
      return {a_ * std::cos(th), b_ * std::sin(th)};
    }
  }
  return {};
}

AmbientPoint CurveGeometry::unit_tangent(double s) const {
  s = wrap(s);
  switch (kind_) {
    case CurveKind::FlatCylinder:
      return {1.0, 0.0};
    case CurveKind::Circle:
      return {-std::sin(s / R_), std::cos(s / R_)};
    case CurveKind::Ellipse: {
      const double th = theta_of_s(s);
      const double g = ellipse_speed(th);
      return {-a_ * std::sin(th) / g, b_ * std::cos(th) / g};
    }
  }
  return {};
}

AmbientPoint CurveGeometry::unit_normal(double s) const {
  const AmbientPoint t = unit_tangent(s);
  return {-t.y, t.x};
}

double CurveGeometry::kappa(double s) const {
  switch (kind_) {
    case CurveKind::FlatCylinder:
      return 0.0;
    case CurveKind::Circle:
      return 1.0 / R_;
    case CurveKind::Ellipse: {
      const double th = theta_of_s(s);
      const double g = ellipse_speed(th);
      return a_ * b_ / (g * g * g);
    }
  }
  return 0.0;
}

double CurveGeometry::dkappa(double s) const {
  if (kind_ != CurveKind::Ellipse) return 0.0;
  const double th = theta_of_s(s);
  const double g2 = a_ * a_ * std::sin(th) * std::sin(th) +
                    b_ * b_ * std::cos(th) * std::cos(th);
  const double g = std::sqrt(g2);
  const double dg2 = (a_ * a_ - b_ * b_) * std::sin(2.0 * th);
  // kappa_theta = -(3/2) a b g2^{-5/2} g2'; kappa_s = kappa_theta / g.
  const double kth = -1.5 * a_ * b_ * std::pow(g2, -2.5) * dg2;
  return kth / g;
}

double CurveGeometry::ddkappa(double s) const {
  if (kind_ != CurveKind::Ellipse) return 0.0;
  const double th = theta_of_s(s);
  const double g2 = a_ * a_ * std::sin(th) * std::sin(th) +
                    b_ * b_ * std::cos(th) * std::cos(th);
  const double dg2 = (a_ * a_ - b_ * b_) * std::sin(2.0 * th);
  const double ddg2 = 2.0 * (a_ * a_ - b_ * b_) * std::cos(2.0 * th);
  const double kth = -1.5 * a_ * b_ * std::pow(g2, -2.5) * dg2;
  const double kthth = 3.75 * a_ * b_ * std::pow(g2, -3.5) * dg2 * dg2 -
                       1.5 * a_ * b_ * std::pow(g2, -2.5) * ddg2;
  // kappa_ss = kappa_thth / g2 - kappa_th g2' / (2 g2^2).
  return kthth / g2 - kth * dg2 / (2.0 * g2 * g2);
}

AmbientPoint CurveGeometry::fermi_to_ambient(double s, double n) const {
  if (std::abs(n) * kappa_max_ >= 1.0)
    throw std::invalid_argument("fermi_to_ambient: |n| kappa_max >= 1");
  if (kind_ == CurveKind::FlatCylinder) return {wrap(s), n};
  const AmbientPoint g = position(s);
  const AmbientPoint nu = unit_normal(s);
  return {g.x + n * nu.x, g.y + n * nu.y};
}

PhysicalFermi CurveGeometry::closest_point_projection(const AmbientPoint& p) const {
  if (kind_ == CurveKind::FlatCylinder) return {wrap(p.x), p.y};
  if (kind_ == CurveKind::Circle) {
    const double r = std::hypot(p.x, p.y);
    if (r == 0.0 || std::abs(R_ - r) >= R_)
      throw std::runtime_error("closest_point_projection: point out of reach");
    return {wrap(R_ * std::atan2(p.y, p.x)), R_ - r};
  }
  // Coarse scan for the nearest curve sample.
  const int M = 512;
  const double hg = Lambda_ / M;
  double best_s = 0.0, best_d2 = 1e300;
  for (int i = 0; i < M; ++i) {
    const double s = i * hg;
    const AmbientPoint g = position(s);
    const double dx = p.x - g.x, dy = p.y - g.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best_s = s;
    }
  }
  // Safeguarded Newton on F(s) = <p - gamma(s), gamma'(s)>, bracketed in the
  // scan cell neighbourhood; F'(s) = -1 + n_est * kappa(s).
  double lo = best_s - hg, hi = best_s + hg;
  auto F = [&](double s) {
    const AmbientPoint g = position(s);
    const AmbientPoint t = unit_tangent(s);
    return (p.x - g.x) * t.x + (p.y - g.y) * t.y;
  };
  double flo = F(lo), fhi = F(hi);
  double s = best_s;
  const double scale = 1.0 + std::sqrt(best_d2);
  bool have_bracket = (flo > 0.0 && fhi < 0.0) || (flo < 0.0 && fhi > 0.0);
  for (int it = 0; it < 50; ++it) {
    const AmbientPoint g = position(s);
    const AmbientPoint t = unit_tangent(s);
    const AmbientPoint nu = unit_normal(s);
    const double dx = p.x - g.x, dy = p.y - g.y;
    const double f = dx * t.x + dy * t.y;
    if (std::abs(f) <= 1e-13 * scale) {
      const double n = dx * nu.x + dy * nu.y;
      if (std::abs(n) * kappa_max_ >= 1.0)
        throw std::runtime_error("closest_point_projection: point out of reach");
      return {wrap(s), n};
    }
    const double n_est = dx * nu.x + dy * nu.y;
    const double df = -1.0 + n_est * kappa(s);
    double step = (df != 0.0) ? -f / df : 0.0;
    double s_new = s + step;
    if (have_bracket && (s_new <= lo || s_new >= hi || step == 0.0)) {
      // Bisection fallback inside the bracket.
      s_new = 0.5 * (lo + hi);
    }
    if (have_bracket) {
      const double fn = F(s_new);
      if ((fn > 0.0) == (flo > 0.0)) {
        lo = s_new;
        flo = fn;
      } else {
        hi = s_new;
        fhi = fn;
      }
    }
    s = s_new;
  }
  throw std::runtime_error("closest_point_projection: Newton did not converge in 50 iterations");
}

double CurveGeometry::density_rho(double s, double n) const {
  return 1.0 - n * kappa(s);
}

double CurveGeometry::potential_U(double s, double n) const {
  if (kind_ == CurveKind::FlatCylinder) return 0.0;
  const double k = kappa(s);
  const double kp = dkappa(s);
  const double kpp = ddkappa(s);
  const double rho = 1.0 - n * k;
  const double ri = 1.0 / rho;
  const double ri2 = ri * ri;
  return 0.25 * k * k * ri2 + 0.5 * n * kpp * ri2 * ri +
         1.25 * n * n * kp * kp * ri2 * ri2;
}

double CurveGeometry::geodesic_distance(double s1, double s2) const {
  const double d = std::abs(wrap(s1) - wrap(s2));
  return std::min(d, Lambda_ - d);
}

}  // namespace tubeflow
