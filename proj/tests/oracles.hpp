// Test-side reference computations, written directly from the defining
// formulas and kept independent of the library under test: closed-form
// Müller-Brown derivatives, finite-difference differentiators, a bare Newton
// refiner for critical points, constrained extrema of xyz on the unit sphere,
// a dense level-set search for the minimum-gradient point, and a brute-force
// resampled Hausdorff distance.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracles {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// --- finite differences ----------------------------------------------------

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-6) {
  Vec g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  const Vec f0 = f(x);
  Mat j(f0.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    j.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

inline Mat fd_hessian(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-4) {
  const int n = static_cast<int>(x.size());
  Mat hess(n, n);
  const double f0 = f(x);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      if (i == j) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        hess(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
      } else {
        Vec xpp = x, xpm = x, xmp = x, xmm = x;
        xpp[i] += h;
        xpp[j] += h;
        xpm[i] += h;
        xpm[j] -= h;
        xmp[i] -= h;
        xmp[j] += h;
        xmm[i] -= h;
        xmm[j] -= h;
        hess(i, j) = hess(j, i) = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
      }
    }
  }
  return hess;
}

// --- Müller-Brown closed form ----------------------------------------------

// U(x,y) = Σ_k A_k exp(a_k(x-x0_k)² + b_k(x-x0_k)(y-y0_k) + c_k(y-y0_k)²)
inline double mb_value(double x, double y) {
  static const double A[4] = {-200.0, -100.0, -170.0, 15.0};
  static const double a[4] = {-1.0, -1.0, -6.5, 0.7};
  static const double b[4] = {0.0, 0.0, 11.0, 0.6};
  static const double c[4] = {-10.0, -10.0, -6.5, 0.7};
  static const double X[4] = {1.0, 0.0, -0.5, -1.0};
  static const double Y[4] = {0.0, 0.5, 1.5, 1.0};
  double u = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double dx = x - X[k], dy = y - Y[k];
    u += A[k] * std::exp(a[k] * dx * dx + b[k] * dx * dy + c[k] * dy * dy);
  }
  return u;
}

inline Eigen::Vector2d mb_gradient(double x, double y) {
  static const double A[4] = {-200.0, -100.0, -170.0, 15.0};
  static const double a[4] = {-1.0, -1.0, -6.5, 0.7};
  static const double b[4] = {0.0, 0.0, 11.0, 0.6};
  static const double c[4] = {-10.0, -10.0, -6.5, 0.7};
  static const double X[4] = {1.0, 0.0, -0.5, -1.0};
  static const double Y[4] = {0.0, 0.5, 1.5, 1.0};
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (int k = 0; k < 4; ++k) {
    const double dx = x - X[k], dy = y - Y[k];
    const double e = A[k] * std::exp(a[k] * dx * dx + b[k] * dx * dy + c[k] * dy * dy);
    g[0] += e * (2.0 * a[k] * dx + b[k] * dy);
    g[1] += e * (b[k] * dx + 2.0 * c[k] * dy);
  }
  return g;
}

inline Eigen::Matrix2d mb_hessian(double x, double y) {
  static const double A[4] = {-200.0, -100.0, -170.0, 15.0};
  static const double a[4] = {-1.0, -1.0, -6.5, 0.7};
  static const double b[4] = {0.0, 0.0, 11.0, 0.6};
  static const double c[4] = {-10.0, -10.0, -6.5, 0.7};
  static const double X[4] = {1.0, 0.0, -0.5, -1.0};
  static const double Y[4] = {0.0, 0.5, 1.5, 1.0};
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  for (int k = 0; k < 4; ++k) {
    const double dx = x - X[k], dy = y - Y[k];
    const double e = A[k] * std::exp(a[k] * dx * dx + b[k] * dx * dy + c[k] * dy * dy);
    const double px = 2.0 * a[k] * dx + b[k] * dy;
    const double py = b[k] * dx + 2.0 * c[k] * dy;
    h(0, 0) += e * (px * px + 2.0 * a[k]);
    h(0, 1) += e * (px * py + b[k]);
    h(1, 1) += e * (py * py + 2.0 * c[k]);
  }
  h(1, 0) = h(0, 1);
  return h;
}

// --- critical point refinement ----------------------------------------------

struct Critical {
  Eigen::Vector2d x;
  double value = 0.0;
  int negative_eigenvalues = 0;  // 0 minimum, 1 saddle, 2 maximum
};

// Plain Newton on ∇U = 0 from a seed; throws when it wanders or stalls.
inline Critical mb_refine(const Eigen::Vector2d& seed) {
  Eigen::Vector2d x = seed;
  for (int it = 0; it < 80; ++it) {
    const Eigen::Vector2d g = mb_gradient(x[0], x[1]);
    if (g.norm() < 1e-13) break;
    const Eigen::Vector2d step = mb_hessian(x[0], x[1]).fullPivLu().solve(g);
    if (!step.allFinite() || step.norm() > 1.0)
      throw std::runtime_error("Newton refinement diverged");
    x -= step;
  }
  if (mb_gradient(x[0], x[1]).norm() > 1e-10)
    throw std::runtime_error("Newton refinement did not converge");
  Critical c;
  c.x = x;
  c.value = mb_value(x[0], x[1]);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(mb_hessian(x[0], x[1]));
  c.negative_eigenvalues = (es.eigenvalues()[0] < 0.0) + (es.eigenvalues()[1] < 0.0);
  return c;
}

inline Critical mb_rightmost_minimum() { return mb_refine({0.6, 0.03}); }
inline Critical mb_middle_minimum() { return mb_refine({-0.05, 0.47}); }
inline Critical mb_left_minimum() { return mb_refine({-0.56, 1.44}); }
inline Critical mb_low_saddle() { return mb_refine({0.21, 0.29}); }
inline Critical mb_high_saddle() { return mb_refine({-0.82, 0.62}); }

// --- constrained extrema of xyz on the unit sphere ---------------------------

// ∇(xyz) = μ·p with |p| = 1 forces either two coordinates to vanish (the six
// axis points, μ = 0) or x² = y² = z² = 1/3 (the eight symmetric extrema).
inline std::vector<Vec> sphere_xyz_extrema() {
  std::vector<Vec> pts;
  for (int axis = 0; axis < 3; ++axis)
    for (double s : {1.0, -1.0}) {
      Vec p = Vec::Zero(3);
      p[axis] = s;
      pts.push_back(p);
    }
  const double r = 1.0 / std::sqrt(3.0);
  for (double sx : {1.0, -1.0})
    for (double sy : {1.0, -1.0})
      for (double sz : {1.0, -1.0}) {
        Vec p(3);
        p << sx * r, sy * r, sz * r;
        pts.push_back(p);
      }
  return pts;
}

// ‖∇(xyz) − μp‖ with the least-squares multiplier μ = p·∇(xyz); zero exactly
// at constrained critical points.
inline double sphere_xyz_lagrange_residual(const Vec& p) {
  Vec g(3);
  g << p[1] * p[2], p[0] * p[2], p[0] * p[1];
  const double mu = p.dot(g);
  return (g - mu * p).norm() + std::abs(p.norm() - 1.0);
}

// --- level-set minimum-gradient search --------------------------------------

// First crossing of {f = L} along the ray from `center` in direction θ,
// located by marching then bisection.  Returns false when the ray exits the
// search radius without crossing.
inline bool ray_level_crossing(const std::function<double(const Vec&)>& f, const Vec& center,
                               double theta, double L, double r_max, Vec& out) {
  Vec dir(2);
  dir << std::cos(theta), std::sin(theta);
  const double dr = 1e-3;
  double r_lo = 0.0;
  double f_lo = f(center);
  for (double r = dr; r <= r_max; r += dr) {
    const Vec p = center + r * dir;
    const double fr = f(p);
    if ((f_lo - L) * (fr - L) <= 0.0) {
      double a = r_lo, b = r;
      for (int it = 0; it < 80; ++it) {
        const double m = 0.5 * (a + b);
        if ((f(center + a * dir) - L) * (f(center + m * dir) - L) <= 0.0)
          b = m;
        else
          a = m;
      }
      out = center + 0.5 * (a + b) * dir;
      return true;
    }
    r_lo = r;
    f_lo = fr;
  }
  return false;
}

// Minimizer of ‖∇f‖² over the closed contour {f = L} surrounding `center`,
// found by a dense angular sweep followed by golden-section refinement of the
// winning angle.
inline Vec level_set_min_gradient(const std::function<double(const Vec&)>& f,
                                  const std::function<Vec(const Vec&)>& grad, const Vec& center,
                                  double L, double r_max = 2.0, int n_angles = 2000) {
  const double two_pi = 6.283185307179586476925286766559;
  double best_theta = std::numeric_limits<double>::quiet_NaN();
  double best_val = std::numeric_limits<double>::infinity();
  Vec p(2);
  auto objective = [&](double theta) {
    return ray_level_crossing(f, center, theta, L, r_max, p)
               ? grad(p).squaredNorm()
               : std::numeric_limits<double>::infinity();
  };
  for (int i = 0; i < n_angles; ++i) {
    const double theta = two_pi * i / n_angles;
    const double v = objective(theta);
    if (v < best_val) {
      best_val = v;
      best_theta = theta;
    }
  }
  if (!std::isfinite(best_val)) throw std::runtime_error("no closed contour around center");
  const double span = two_pi / n_angles;
  double a = best_theta - span, b = best_theta + span;
  const double gr = 0.6180339887498949;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = objective(c), fd = objective(d);
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = objective(d);
    }
  }
  if (!ray_level_crossing(f, center, 0.5 * (a + b), L, r_max, p))
    throw std::runtime_error("contour point lost during refinement");
  return p;
}

// --- polyline utilities -------------------------------------------------------

inline double point_to_polyline(const Vec& q, const std::vector<Vec>& nodes) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::min(best, (q - nodes[i]).norm());
    if (i + 1 < nodes.size()) {
      const Vec d = nodes[i + 1] - nodes[i];
      const double len2 = d.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((q - nodes[i]).dot(d) / len2, 0.0, 1.0) : 0.0;
      best = std::min(best, (q - (nodes[i] + t * d)).norm());
    }
  }
  return best;
}

// Equal-arclength resampling, used to turn polylines into dense point sets.
inline std::vector<Vec> resample_polyline(const std::vector<Vec>& nodes, int samples) {
  std::vector<double> s{0.0};
  for (std::size_t i = 1; i < nodes.size(); ++i)
    s.push_back(s.back() + (nodes[i] - nodes[i - 1]).norm());
  std::vector<Vec> out;
  const double total = s.back();
  for (int k = 0; k < samples; ++k) {
    const double target = total * k / (samples - 1);
    std::size_t i = 1;
    while (i + 1 < s.size() && s[i] < target) ++i;
    const double seg = s[i] - s[i - 1];
    const double t = seg > 0.0 ? (target - s[i - 1]) / seg : 0.0;
    out.push_back(nodes[i - 1] + t * (nodes[i] - nodes[i - 1]));
  }
  return out;
}

// Dense symmetric Hausdorff distance via resampling; an independent check of
// the vertex-against-segment implementation.
inline double brute_hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b,
                              int samples = 1500) {
  const auto ra = resample_polyline(a, samples);
  const auto rb = resample_polyline(b, samples);
  double worst = 0.0;
  for (const auto& p : ra) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : rb) best = std::min(best, (p - q).norm());
    worst = std::max(worst, best);
  }
  for (const auto& q : rb) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : ra) best = std::min(best, (q - p).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace oracles
