// Fixture generation: damped-Newton root searches for critical points of an
// energy and steady states of a vector field, seeded from a coarse grid.
#pragma once

#include <gradex/potentials.hpp>

#include <algorithm>
#include <optional>
#include <vector>

namespace gradex::potentials {

enum class CriticalKind { Minimum, Saddle, Maximum };

struct CriticalPoint {
  Vec x;
  double value = 0.0;
  double residual = 0.0;  // |grad| at x
  CriticalKind kind = CriticalKind::Saddle;
};

struct SteadyState {
  Vec x;
  double residual = 0.0;  // |X| at x
  bool stable = false;
};

namespace detail {

// Damped Newton on residual(x) = 0 with Jacobian jac(x); backtracks until the
// residual norm decreases.  Returns nullopt on stagnation or singular steps.
template <typename ResidualFn, typename JacobianFn>
std::optional<Vec> damped_newton(const ResidualFn& residual, const JacobianFn& jac, Vec x,
                                 double tol, int max_iterations) {
  Vec r = residual(x);
  if (!r.allFinite()) return std::nullopt;
  for (int it = 0; it < max_iterations; ++it) {
    if (r.norm() < tol) return x;
    const Mat j = jac(x);
    Eigen::FullPivLU<Mat> lu(j);
    if (!lu.isInvertible()) return std::nullopt;
    const Vec step = lu.solve(-r);
    double alpha = 1.0;
    bool accepted = false;
    for (int cut = 0; cut < 30; ++cut) {
      const Vec trial = x + alpha * step;
      const Vec rt = residual(trial);
      if (rt.allFinite() && rt.norm() < r.norm()) {
        x = trial;
        r = rt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) return std::nullopt;
  }
  return r.norm() < tol ? std::optional<Vec>(x) : std::nullopt;
}

inline bool within_box(const Vec& x, const Vec& lo, const Vec& hi, double margin) {
  for (int i = 0; i < x.size(); ++i)
    if (x[i] < lo[i] - margin || x[i] > hi[i] + margin) return false;
  return true;
}

template <typename Point>
void dedupe_and_sort(std::vector<Point>& pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    for (int i = 0; i < a.x.size(); ++i) {
      if (a.x[i] < b.x[i] - 1e-9) return true;
      if (a.x[i] > b.x[i] + 1e-9) return false;
    }
    return false;
  });
  std::vector<Point> unique;
  for (const auto& p : pts) {
    bool dup = false;
    for (const auto& u : unique)
      if ((p.x - u.x).norm() < 1e-6 * (1.0 + u.x.norm())) dup = true;
    if (!dup) unique.push_back(p);
  }
  pts = std::move(unique);
}

}  // namespace detail

inline std::vector<CriticalPoint> find_energy_critical_points(const Energy& e, const Vec& lo,
                                                              const Vec& hi, int grid = 20,
                                                              double tol = 1e-12,
                                                              int max_iterations = 120) {
  std::vector<CriticalPoint> found;
  const int n = e.dim;
  std::vector<int> idx(n, 0);
  const long total = static_cast<long>(std::pow(grid, n));
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Vec seed(n);
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rem % grid);
      rem /= grid;
      seed[i] = lo[i] + (hi[i] - lo[i]) * (k + 0.5) / grid;
    }
    const auto root = detail::damped_newton(e.gradient, e.hessian, seed, tol, max_iterations);
    if (!root || !detail::within_box(*root, lo, hi, 0.0)) continue;
    CriticalPoint cp;
    cp.x = *root;
    cp.value = e.eval(cp.x);
    cp.residual = e.gradient(cp.x).norm();
    const Eigen::SelfAdjointEigenSolver<Mat> es(e.hessian(cp.x));
    const Vec ev = es.eigenvalues();
    if (ev.minCoeff() > 0)
      cp.kind = CriticalKind::Minimum;
    else if (ev.maxCoeff() < 0)
      cp.kind = CriticalKind::Maximum;
    else
      cp.kind = CriticalKind::Saddle;
    found.push_back(cp);
  }
  detail::dedupe_and_sort(found);
  return found;
}

inline std::vector<SteadyState> find_steady_states(const VectorField& f, const Vec& lo,
                                                   const Vec& hi, int grid = 20,
                                                   double tol = 1e-12,
                                                   int max_iterations = 120) {
  std::vector<SteadyState> found;
  const int n = f.dim;
  const long total = static_cast<long>(std::pow(grid, n));
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Vec seed(n);
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rem % grid);
      rem /= grid;
      seed[i] = lo[i] + (hi[i] - lo[i]) * (k + 0.5) / grid;
    }
    const auto root = detail::damped_newton(f.eval, f.jacobian, seed, tol, max_iterations);
    if (!root || !detail::within_box(*root, lo, hi, 0.0)) continue;
    SteadyState ss;
    ss.x = *root;
    ss.residual = f.eval(ss.x).norm();
    const Eigen::EigenSolver<Mat> es(f.jacobian(ss.x));
    ss.stable = es.eigenvalues().real().maxCoeff() < 0.0;
    found.push_back(ss);
  }
  detail::dedupe_and_sort(found);
  return found;
}

// Convenience selectors used by demos and tests.
inline CriticalPoint rightmost_minimum(const std::vector<CriticalPoint>& pts) {
  const CriticalPoint* best = nullptr;
  for (const auto& p : pts)
    if (p.kind == CriticalKind::Minimum && (!best || p.x[0] > best->x[0])) best = &p;
  if (!best) throw Error("no minimum among critical points");
  return *best;
}

inline CriticalPoint lowest_minimum(const std::vector<CriticalPoint>& pts) {
  const CriticalPoint* best = nullptr;
  for (const auto& p : pts)
    if (p.kind == CriticalKind::Minimum && (!best || p.x[1] < best->x[1])) best = &p;
  if (!best) throw Error("no minimum among critical points");
  return *best;
}

}  // namespace gradex::potentials
