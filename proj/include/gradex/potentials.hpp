// Benchmark energies and vector fields: Gaussian-well surface in the plane
// and on a sphere, a polynomial on the unit sphere, an exothermic-reactor
// field, and the van der Pol oscillator.
#pragma once

#include <gradex/common.hpp>
#include <gradex/config.hpp>

#include <array>
#include <functional>
#include <string>

namespace gradex::potentials {

// Scalar energy with analytic first and second derivatives.
struct Energy {
  int dim = 0;
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
};

// Autonomous first-order dynamics dx/dt = eval(x).
struct VectorField {
  int dim = 0;
  std::function<Vec(const Vec&)> eval;
  std::function<Mat(const Vec&)> jacobian;
};

// Four-term Gaussian sum in two variables.  The slots a, b, c are the
// quadratic exponent coefficients; which products they multiply depends on
// the family (see mueller_brown / meander_potential below).
struct GaussianTermTable {
  std::array<double, 4> amplitude{};
  std::array<double, 4> a{};
  std::array<double, 4> b{};
  std::array<double, 4> c{};
  std::array<double, 4> x0{};
  std::array<double, 4> y0{};
};

using MBCoefficients = GaussianTermTable;
using MeanderCoefficients = GaussianTermTable;

inline GaussianTermTable mueller_brown_table() {
  GaussianTermTable t;
  t.amplitude = {-200.0, -100.0, -170.0, 15.0};
  t.a = {-1.0, -1.0, -6.5, 0.7};
  t.b = {0.0, 0.0, 11.0, 0.6};
  t.c = {-10.0, -10.0, -6.5, 0.7};
  t.x0 = {1.0, 0.0, -0.5, -1.0};
  t.y0 = {0.0, 0.5, 1.5, 1.0};
  return t;
}

inline GaussianTermTable meander_table() {
  GaussianTermTable t;
  t.amplitude = {10.0, -0.4, 0.8, 6.0};
  t.a = {-1.0 / 3000.0, -1.0 / 300.0, -1.0 / 1500.0, -1.0 / 3000.0};
  t.b = {-1.0 / 1000.0, -1.0 / 30.0, -1.0 / 1500.0, -1.0 / 3000.0};
  t.c = {0.0, 1.0 / 200.0, 1.0 / 2000.0, 3.0 / 20000.0};
  t.x0 = {0.0, 15.0, 25.0, 40.0};
  t.y0 = {0.0, 10.0, 100.0, 30.0};
  return t;
}

// Override table entries from config keys "<prefix>.A1".."<prefix>.y4".
inline GaussianTermTable table_from_config(const KeyValueConfig& cfg, const std::string& prefix,
                                           GaussianTermTable t) {
  for (int i = 0; i < 4; ++i) {
    const std::string n = std::to_string(i + 1);
    t.amplitude[i] = cfg.get_double(prefix + ".A" + n, t.amplitude[i]);
    t.a[i] = cfg.get_double(prefix + ".a" + n, t.a[i]);
    t.b[i] = cfg.get_double(prefix + ".b" + n, t.b[i]);
    t.c[i] = cfg.get_double(prefix + ".c" + n, t.c[i]);
    t.x0[i] = cfg.get_double(prefix + ".x" + n, t.x0[i]);
    t.y0[i] = cfg.get_double(prefix + ".y" + n, t.y0[i]);
  }
  return t;
}

// U(w) = sum_i A_i exp(a_i dx^2 + b_i dx dy + c_i dy^2), dx = w1-x0, dy = w2-y0.
inline Energy mueller_brown(const GaussianTermTable& t = mueller_brown_table()) {
  Energy e;
  e.dim = 2;
  e.eval = [t](const Vec& w) {
    double u = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double dx = w[0] - t.x0[i], dy = w[1] - t.y0[i];
      u += t.amplitude[i] * std::exp(t.a[i] * dx * dx + t.b[i] * dx * dy + t.c[i] * dy * dy);
    }
    return u;
  };
  e.gradient = [t](const Vec& w) {
    Vec g = Vec::Zero(2);
    for (int i = 0; i < 4; ++i) {
      const double dx = w[0] - t.x0[i], dy = w[1] - t.y0[i];
      const double f = t.amplitude[i] * std::exp(t.a[i] * dx * dx + t.b[i] * dx * dy + t.c[i] * dy * dy);
      g[0] += f * (2.0 * t.a[i] * dx + t.b[i] * dy);
      g[1] += f * (t.b[i] * dx + 2.0 * t.c[i] * dy);
    }
    return g;
  };
  e.hessian = [t](const Vec& w) {
    Mat h = Mat::Zero(2, 2);
    for (int i = 0; i < 4; ++i) {
      const double dx = w[0] - t.x0[i], dy = w[1] - t.y0[i];
      const double f = t.amplitude[i] * std::exp(t.a[i] * dx * dx + t.b[i] * dx * dy + t.c[i] * dy * dy);
      const double gx = 2.0 * t.a[i] * dx + t.b[i] * dy;
      const double gy = t.b[i] * dx + 2.0 * t.c[i] * dy;
      h(0, 0) += f * (gx * gx + 2.0 * t.a[i]);
      h(0, 1) += f * (gx * gy + t.b[i]);
      h(1, 1) += f * (gy * gy + 2.0 * t.c[i]);
    }
    h(1, 0) = h(0, 1);
    return h;
  };
  return e;
}

// E(w) = -sum_i A_i exp(a_i dx^2 + b_i dy^2 + c_i w1 w2); note the cross term
// couples the raw coordinates, not the offset ones.
inline Energy meander_potential(const GaussianTermTable& t = meander_table()) {
  Energy e;
  e.dim = 2;
  e.eval = [t](const Vec& w) {
    double u = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double dx = w[0] - t.x0[i], dy = w[1] - t.y0[i];
      u -= t.amplitude[i] * std::exp(t.a[i] * dx * dx + t.b[i] * dy * dy + t.c[i] * w[0] * w[1]);
    }
    return u;
  };
  e.gradient = [t](const Vec& w) {
    Vec g = Vec::Zero(2);
    for (int i = 0; i < 4; ++i) {
      const double dx = w[0] - t.x0[i], dy = w[1] - t.y0[i];
      const double f =
          -t.amplitude[i] * std::exp(t.a[i] * dx * dx + t.b[i] * dy * dy + t.c[i] * w[0] * w[1]);
      g[0] += f * (2.0 * t.a[i] * dx + t.c[i] * w[1]);
      g[1] += f * (2.0 * t.b[i] * dy + t.c[i] * w[0]);
    }
    return g;
  };
  e.hessian = [t](const Vec& w) {
    Mat h = Mat::Zero(2, 2);
    for (int i = 0; i < 4; ++i) {
      const double dx = w[0] - t.x0[i], dy = w[1] - t.y0[i];
      const double f =
          -t.amplitude[i] * std::exp(t.a[i] * dx * dx + t.b[i] * dy * dy + t.c[i] * w[0] * w[1]);
      const double gx = 2.0 * t.a[i] * dx + t.c[i] * w[1];
      const double gy = 2.0 * t.b[i] * dy + t.c[i] * w[0];
      h(0, 0) += f * (gx * gx + 2.0 * t.a[i]);
      h(0, 1) += f * (gx * gy + t.c[i]);
      h(1, 1) += f * (gy * gy + 2.0 * t.b[i]);
    }
    h(1, 0) = h(0, 1);
    return h;
  };
  return e;
}

// E(x) = x^T Q x / 2 for symmetric Q; the Hessian is exactly Q.
inline Energy quadratic_energy(const Mat& q_in) {
  const Mat q = 0.5 * (q_in + q_in.transpose());
  Energy e;
  e.dim = static_cast<int>(q.rows());
  e.eval = [q](const Vec& x) { return 0.5 * x.dot(q * x); };
  e.gradient = [q](const Vec& x) -> Vec { return q * x; };
  e.hessian = [q](const Vec&) { return q; };
  return e;
}

// E(x, y, z) = x y z on ambient R^3; interesting on the unit sphere, where it
// has 14 constrained critical points (6 on the axes, 8 at |x|=|y|=|z|).
inline Energy sphere_xyz() {
  Energy e;
  e.dim = 3;
  e.eval = [](const Vec& x) { return x[0] * x[1] * x[2]; };
  e.gradient = [](const Vec& x) {
    Vec g(3);
    g << x[1] * x[2], x[0] * x[2], x[0] * x[1];
    return g;
  };
  e.hessian = [](const Vec& x) {
    Mat h(3, 3);
    h << 0.0, x[2], x[1],
         x[2], 0.0, x[0],
         x[1], x[0], 0.0;
    return h;
  };
  return e;
}

// Closed form of x y z composed with the inverse stereographic map from the
// plane tangent at the south pole.
inline double sphere_xyz_pullback(double u, double v) {
  const double s = u * u + v * v;
  const double d = s + 1.0;
  return 4.0 * u * v * (s - 1.0) / (d * d * d);
}

// Nonadiabatic stirred-tank reactor in dimensionless conversion/temperature
// coordinates.
struct CstrParameters {
  double damkohler = 0.085;
  double b = 22.0;
  double beta = 3.0;
  double coolant_temp = -0.04;
};

inline VectorField cstr_field(const CstrParameters& p = {}) {
  VectorField f;
  f.dim = 2;
  f.eval = [p](const Vec& x) {
    const double r = p.damkohler * (1.0 - x[0]) * std::exp(x[1]);
    Vec v(2);
    v << -x[0] + r, -x[1] + p.b * r - p.beta * (x[1] - p.coolant_temp);
    return v;
  };
  f.jacobian = [p](const Vec& x) {
    const double g = p.damkohler * std::exp(x[1]);
    Mat j(2, 2);
    j << -1.0 - g, g * (1.0 - x[0]),
         -p.b * g, -1.0 + p.b * g * (1.0 - x[0]) - p.beta;
    return j;
  };
  return f;
}

inline VectorField van_der_pol_field(double mu) {
  VectorField f;
  f.dim = 2;
  f.eval = [mu](const Vec& y) {
    Vec v(2);
    v << y[1], mu * (1.0 - y[0] * y[0]) * y[1] - y[0];
    return v;
  };
  f.jacobian = [mu](const Vec& y) {
    Mat j(2, 2);
    j << 0.0, 1.0,
         -2.0 * mu * y[0] * y[1] - 1.0, mu * (1.0 - y[0] * y[0]);
    return j;
  };
  return f;
}

// E(x) = |X(x)|^2.  Gradient is analytic through the field Jacobian; the
// Hessian needs second derivatives of X, obtained by central differences of
// the Jacobian (the only finite differencing in this header).
inline Energy squared_magnitude(const VectorField& field) {
  Energy e;
  e.dim = field.dim;
  e.eval = [field](const Vec& x) { return field.eval(x).squaredNorm(); };
  e.gradient = [field](const Vec& x) -> Vec {
    return 2.0 * field.jacobian(x).transpose() * field.eval(x);
  };
  e.hessian = [field](const Vec& x) {
    const int n = field.dim;
    const Vec fx = field.eval(x);
    const Mat j = field.jacobian(x);
    Mat h = 2.0 * j.transpose() * j;
    const double step = 6e-6 * (1.0 + x.cwiseAbs().maxCoeff());
    for (int col = 0; col < n; ++col) {
      Vec xp = x, xm = x;
      xp[col] += step;
      xm[col] -= step;
      // dj(k, i) = d J_ki / d x_col = d^2 X_k / d x_i d x_col
      const Mat dj = (field.jacobian(xp) - field.jacobian(xm)) / (2.0 * step);
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) h(i, col) += 2.0 * fx[k] * dj(k, i);
    }
    h = 0.5 * (h + h.transpose()).eval();
    return h;
  };
  return e;
}

// Affine map from angle coordinates (azimuth, elevation) to the planar
// Gaussian-well domain, chosen so the well region covers most of the sphere.
inline Eigen::Vector2d angle_to_plane(const Eigen::Vector2d& k) {
  return {1.973521294 * k[0] - 1.85, 1.750704373 * k[1] + 0.875};
}

inline Eigen::Vector2d plane_to_angle(const Eigen::Vector2d& w) {
  return {(w[0] + 1.85) / 1.973521294, (w[1] - 0.875) / 1.750704373};
}

inline Vec sphere_point_from_angles(const Eigen::Vector2d& k) {
  Vec p(3);
  p << std::cos(k[1]) * std::cos(k[0]), std::cos(k[1]) * std::sin(k[0]), std::sin(k[1]);
  return p;
}

// Point of the unit sphere whose angle coordinates map to planar point w.
inline Vec sphere_image_of_plane_point(const Eigen::Vector2d& w) {
  return sphere_point_from_angles(plane_to_angle(w));
}

// Gaussian-well energy transported to R^3 \ {z-axis} through the angle chart:
// V(x) = U(angle_to_plane(azimuth, elevation)).  Constant along rays from the
// origin, so its restriction to the unit sphere carries all the structure.
inline Energy mb_on_sphere(const GaussianTermTable& t = mueller_brown_table()) {
  const Energy plane = mueller_brown(t);
  static constexpr double c1 = 1.973521294, c2 = 1.750704373;

  struct AngleJet {
    Eigen::Vector2d k;
    Eigen::Matrix<double, 2, 3> dk;
    std::array<Mat, 2> d2k;
  };
  auto angle_jet = [](const Vec& x) {
    const double q = x[0] * x[0] + x[1] * x[1];
    if (q < 1e-24) throw DomainError("angle chart undefined on the z-axis");
    const double r = std::sqrt(q);
    const double rho2 = q + x[2] * x[2];
    AngleJet jet;
    jet.k << std::atan2(x[1], x[0]), std::atan2(x[2], r);
    jet.dk << -x[1] / q, x[0] / q, 0.0,
              -x[2] * x[0] / (r * rho2), -x[2] * x[1] / (r * rho2), r / rho2;
    Mat th = Mat::Zero(3, 3);
    th(0, 0) = 2.0 * x[0] * x[1] / (q * q);
    th(0, 1) = th(1, 0) = (x[1] * x[1] - x[0] * x[0]) / (q * q);
    th(1, 1) = -2.0 * x[0] * x[1] / (q * q);
    Mat ph = Mat::Zero(3, 3);
    const double zr = x[2] / (r * rho2);
    ph(0, 0) = -zr * (1.0 - x[0] * x[0] / q - 2.0 * x[0] * x[0] / rho2);
    ph(1, 1) = -zr * (1.0 - x[1] * x[1] / q - 2.0 * x[1] * x[1] / rho2);
    ph(0, 1) = ph(1, 0) = x[2] * x[0] * x[1] * (1.0 / q + 2.0 / rho2) / (r * rho2);
    ph(0, 2) = ph(2, 0) = x[0] * (x[2] * x[2] - q) / (r * rho2 * rho2);
    ph(1, 2) = ph(2, 1) = x[1] * (x[2] * x[2] - q) / (r * rho2 * rho2);
    ph(2, 2) = -2.0 * r * x[2] / (rho2 * rho2);
    jet.d2k = {th, ph};
    return jet;
  };

  Energy e;
  e.dim = 3;
  e.eval = [plane, angle_jet](const Vec& x) {
    const AngleJet jet = angle_jet(x);
    return plane.eval(angle_to_plane(jet.k));
  };
  e.gradient = [plane, angle_jet](const Vec& x) -> Vec {
    const AngleJet jet = angle_jet(x);
    const Vec gu = plane.gradient(angle_to_plane(jet.k));
    return jet.dk.transpose() * Eigen::Vector2d(c1 * gu[0], c2 * gu[1]);
  };
  e.hessian = [plane, angle_jet](const Vec& x) {
    const AngleJet jet = angle_jet(x);
    const Eigen::Vector2d w = angle_to_plane(jet.k);
    const Vec gu = plane.gradient(w);
    const Mat hu = plane.hessian(w);
    const Eigen::Vector2d scale(c1, c2);
    Mat h = Mat::Zero(3, 3);
    for (int m = 0; m < 2; ++m) {
      h += scale[m] * gu[m] * jet.d2k[m];
      for (int n = 0; n < 2; ++n)
        h += scale[m] * scale[n] * hu(m, n) * jet.dk.row(m).transpose() * jet.dk.row(n);
    }
    return h;
  };
  return e;
}

enum class PoincareForm { AsPrinted, Squared };

// Squared hyperbolic length of the van der Pol field on the unit disk with
// the conformal factor 4/(1-|y|^2) (AsPrinted) or its square (Squared).
inline double hyperbolic_squared_length(const Eigen::Vector2d& y, double mu,
                                        PoincareForm form = PoincareForm::AsPrinted) {
  const double s = y.squaredNorm();
  if (s >= 1.0) throw DomainError("point outside the open unit disk");
  const double denom = 1.0 - s;
  const double conformal = form == PoincareForm::AsPrinted ? 4.0 / denom : 4.0 / (denom * denom);
  const VectorField f = van_der_pol_field(mu);
  Vec yv(2);
  yv << y[0], y[1];
  return conformal * f.eval(yv).squaredNorm();
}

}  // namespace gradex::potentials
