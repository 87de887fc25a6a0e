// Euclidean reference curves between minima and saddles: flat-space gradient
// extremal, Newton trajectory, gentlest-ascent dynamics, and the string
// method, plus Hausdorff distances to compare them.  The flat GE here is a
// self-contained implementation, deliberately independent of the chart-based
// continuation module so the two can cross-validate each other.
#pragma once

#include <gradex/continuation.hpp>
#include <gradex/potentials.hpp>

#include <string>
#include <vector>

namespace gradex::comparison_paths {

using continuation::ContinuationConfig;
using continuation::EigenBranch;
using potentials::Energy;

struct PathResult {
  std::vector<Vec> nodes;
  std::vector<double> levels;  // energy along the path
  std::string method;
  bool converged = false;
  double terminal_gradient_norm = 0.0;
  std::string note;
  double max_unit_deviation = 0.0;  // GAD: worst |  |v| - 1 | over recorded steps
};

namespace detail {

inline Vec flat_residual(const Energy& e, const Vec& x, double lambda, double level) {
  const int n = e.dim;
  const Vec g = e.gradient(x);
  Vec r(n + 1);
  r[0] = e.eval(x) - level;
  r.tail(n) = e.hessian(x) * g - lambda * g;
  require_finite(r, "flat extremal residual");
  return r;
}

inline Mat flat_jacobian(const Energy& e, const Vec& x, double lambda, double level,
                         double fd_step) {
  const int n = e.dim;
  Mat jac(n + 1, n + 2);
  const double h = fd_step * (1.0 + x.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    jac.col(i) = (flat_residual(e, xp, lambda, level) - flat_residual(e, xm, lambda, level)) /
                 (2.0 * h);
  }
  jac.col(n).setZero();
  jac.col(n).tail(n) = -e.gradient(x);
  jac.col(n + 1).setZero();
  jac(0, n + 1) = -1.0;
  return jac;
}

inline Vec weights_for(const ContinuationConfig& cfg, int n) {
  Vec w = Vec::Ones(n + 2);
  w[n] = 1.0 / cfg.lambda_scale;
  w[n + 1] = 1.0 / cfg.level_scale;
  return w;
}

inline Vec qr_null_tangent(const Mat& jac, const Vec& weights) {
  const Eigen::HouseholderQR<Mat> qr(jac.transpose());
  Vec t = Mat(qr.householderQ()).col(jac.cols() - 1);
  const double n = (weights.asDiagonal() * t).norm();
  if (!(n > 0.0) || !t.allFinite()) throw NonFiniteError("degenerate flat tangent");
  return t / n;
}

struct FlatCorrected {
  Vec w;
  int iterations = 0;
  Mat jac;
};

inline std::optional<FlatCorrected> flat_correct(const Energy& e, const Vec& start,
                                                 const Vec& anchor, const Vec& tangent, double h,
                                                 const Vec& weights,
                                                 const ContinuationConfig& cfg,
                                                 int max_iterations) {
  const int n = e.dim;
  const Vec normal = weights.cwiseProduct(weights).cwiseProduct(tangent);
  Vec w = start;
  for (int it = 0; it <= max_iterations; ++it) {
    Vec r;
    try {
      r = flat_residual(e, w.head(n), w[n], w[n + 1]);
    } catch (const Error&) {
      return std::nullopt;
    }
    const double c = normal.dot(w - anchor) - h;
    if (std::max(r.cwiseAbs().maxCoeff(), std::abs(c)) <= cfg.corrector_tol) {
      FlatCorrected out;
      out.w = w;
      out.iterations = it;
      out.jac = flat_jacobian(e, w.head(n), w[n], w[n + 1], cfg.fd_step);
      return out;
    }
    if (it == max_iterations) return std::nullopt;
    Mat a(n + 2, n + 2);
    a.topRows(n + 1) = flat_jacobian(e, w.head(n), w[n], w[n + 1], cfg.fd_step);
    a.row(n + 1) = normal.transpose();
    Vec rhs(n + 2);
    rhs.head(n + 1) = -r;
    rhs[n + 1] = -c;
    const Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible()) return std::nullopt;
    const Vec delta = lu.solve(rhs);
    if (!delta.allFinite() ||
        (weights.asDiagonal() * delta).norm() > 1e3 * std::max(1.0, std::abs(h)))
      return std::nullopt;
    w += delta;
  }
  return std::nullopt;
}

inline std::optional<Vec> newton_on_gradient(const Energy& e, Vec x, double target,
                                             int max_iterations = 40) {
  Vec g = e.gradient(x);
  for (int it = 0; it < max_iterations; ++it) {
    if (g.norm() <= target) return x;
    const Eigen::FullPivLU<Mat> lu(e.hessian(x));
    if (!lu.isInvertible()) return std::nullopt;
    const Vec step = lu.solve(-g);
    double alpha = 1.0;
    bool ok = false;
    for (int cut = 0; cut < 25 && !ok; ++cut) {
      const Vec trial = x + alpha * step;
      const Vec gt = e.gradient(trial);
      if (gt.allFinite() && gt.norm() < g.norm()) {
        x = trial;
        g = gt;
        ok = true;
      } else {
        alpha *= 0.5;
      }
    }
    if (!ok) return std::nullopt;
  }
  return g.norm() <= target ? std::optional<Vec>(x) : std::nullopt;
}

}  // namespace detail

// Flat-space gradient extremal: continuation of [E−L; D²E·∇E − λ∇E] = 0 in
// (x, λ, L) with the same adaptive pseudo-arclength scheme as the chart
// tracer, but all-Euclidean quantities.
inline PathResult euclidean_ge(const Energy& e, const Vec& x0, EigenBranch branch,
                               const ContinuationConfig& cfg, double direction_sign = 1.0) {
  const int n = e.dim;
  PathResult out;
  out.method = "ge";
  const Vec weights = detail::weights_for(cfg, n);

  const Eigen::SelfAdjointEigenSolver<Mat> es0(e.hessian(x0));
  Vec dir = es0.eigenvectors().col(branch == EigenBranch::Smallest ? 0 : n - 1);
  dir *= direction_sign;

  Vec x = x0;
  bool offset = false;
  if (e.gradient(x).norm() < cfg.critical_grad_tol) {
    x = x0 + cfg.initial_step * dir;
    offset = true;
  }
  const Eigen::SelfAdjointEigenSolver<Mat> es(e.hessian(x));
  double lambda = branch == EigenBranch::Smallest ? es.eigenvalues()(0)
                                                  : es.eigenvalues()(n - 1);
  Vec w(n + 2);
  w.head(n) = x;
  w[n] = lambda;
  w[n + 1] = e.eval(x);
  Vec t_guess(n + 2);
  t_guess.head(n) = dir;
  t_guess[n] = 0.0;
  t_guess[n + 1] = e.gradient(x).dot(dir);
  t_guess /= (weights.asDiagonal() * t_guess).norm();

  auto corrected = detail::flat_correct(e, w, w, t_guess, 0.0, weights, cfg,
                                        2 * cfg.max_corrector_iterations);
  if (!corrected) {
    out.note = "initial correction failed";
    return out;
  }
  Vec tangent = detail::qr_null_tangent(corrected->jac, weights);
  if (tangent.head(n).dot(dir) < 0.0) tangent = -tangent;
  w = corrected->w;

  if (offset) {
    out.nodes.push_back(x0);
    out.levels.push_back(e.eval(x0));
  }
  out.nodes.push_back(w.head(n));
  out.levels.push_back(w[n + 1]);

  const double exclusion = cfg.start_exclusion < 0 ? 5.0 * cfg.initial_step : cfg.start_exclusion;
  double gmax = e.gradient(w.head(n)).norm();
  double h = cfg.initial_step;
  double last_h = h;

  auto finish_critical = [&](std::size_t idx, double guard) -> bool {
    const Vec& xc = out.nodes[idx];
    if (offset && (xc - x0).norm() < exclusion) return false;
    const auto root = detail::newton_on_gradient(e, xc, std::min(1e-10, cfg.critical_grad_tol * 1e-3),
                                                 cfg.polish_max_iterations);
    if (!root || (*root - xc).norm() > guard) return false;
    out.nodes.resize(idx + 1);
    out.levels.resize(idx + 1);
    out.nodes.back() = *root;
    out.levels.back() = e.eval(*root);
    out.converged = true;
    out.terminal_gradient_norm = e.gradient(*root).norm();
    out.note = "critical point";
    return true;
  };

  while (static_cast<int>(out.nodes.size()) < cfg.max_steps) {
    std::optional<detail::FlatCorrected> next;
    while (true) {
      next = detail::flat_correct(e, w + h * tangent, w, tangent, h, weights, cfg,
                                  cfg.max_corrector_iterations);
      if (next) break;
      h *= 0.5;
      if (h < cfg.min_step) {
        const double gn = e.gradient(w.head(n)).norm();
        if ((gn < cfg.polish_trigger * gmax || gn < 10.0 * cfg.critical_grad_tol) &&
            finish_critical(out.nodes.size() - 1, 5.0 * std::max(cfg.initial_step, last_h)))
          return out;
        out.note = "stalled";
        out.terminal_gradient_norm = gn;
        return out;
      }
    }
    last_h = h;
    Vec t = detail::qr_null_tangent(next->jac, weights);
    if (weights.cwiseProduct(weights).cwiseProduct(t).dot(tangent) < 0.0) t = -t;
    tangent = t;
    w = next->w;
    if (next->iterations <= 3) h = std::min(1.5 * h, cfg.max_step);

    out.nodes.push_back(w.head(n));
    out.levels.push_back(w[n + 1]);
    const double gn = e.gradient(w.head(n)).norm();
    gmax = std::max(gmax, gn);

    const std::size_t k = out.nodes.size();
    if (gn < cfg.critical_grad_tol) {
      if (finish_critical(k - 1, 5.0 * std::max(cfg.initial_step, last_h))) return out;
    } else if (cfg.polish && k >= 3) {
      const double gp = e.gradient(out.nodes[k - 2]).norm();
      const double gpp = e.gradient(out.nodes[k - 3]).norm();
      if (gp < cfg.polish_trigger * gmax && gp < gpp && gp < gn) {
        if (finish_critical(k - 2, 2.0 * std::max(cfg.initial_step, last_h))) return out;
      }
    }
  }
  out.note = "max steps";
  out.terminal_gradient_norm = e.gradient(w.head(n)).norm();
  return out;
}

// Newton trajectory: continuation of B(r)ᵀ∇E = 0 where B spans the
// orthogonal complement of the fixed direction r.
inline PathResult newton_trajectory(const Energy& e, const Vec& x0, const Vec& r,
                                    const ContinuationConfig& cfg, double direction_sign = 1.0) {
  const int n = e.dim;
  PathResult out;
  out.method = "nt";
  if (!(r.norm() > 0.0)) throw Error("newton trajectory needs a nonzero direction");

  Mat rmat = r;
  const Eigen::HouseholderQR<Mat> qr(rmat);
  const Mat basis = Mat(qr.householderQ()).rightCols(n - 1);  // complement of r

  auto residual = [&](const Vec& x) -> Vec { return basis.transpose() * e.gradient(x); };
  auto jacobian = [&](const Vec& x) -> Mat { return basis.transpose() * e.hessian(x); };

  const Vec weights = Vec::Ones(n);
  auto tangent_at = [&](const Vec& x, const Vec& ref) {
    const Eigen::HouseholderQR<Mat> q(jacobian(x).transpose());
    Vec t = Mat(q.householderQ()).col(n - 1);
    t /= t.norm();
    if (ref.size() && t.dot(ref) < 0.0) t = -t;
    return t;
  };

  Vec x = x0;
  Vec ref;
  bool offset = false;
  if (e.gradient(x0).norm() < cfg.critical_grad_tol) {
    const Eigen::FullPivLU<Mat> lu(e.hessian(x0));
    if (!lu.isInvertible()) throw Error("singular Hessian at the start point");
    Vec dir = lu.solve(r);
    dir = direction_sign * dir / dir.norm();
    ref = dir;
    x = x0 + cfg.initial_step * dir;
    offset = true;
    out.nodes.push_back(x0);
    out.levels.push_back(e.eval(x0));
  } else {
    ref = direction_sign * tangent_at(x, Vec());
  }

  auto correct = [&](Vec xw, const Vec& anchor, const Vec& t, double h,
                     int max_iterations) -> std::optional<std::pair<Vec, int>> {
    for (int it = 0; it <= max_iterations; ++it) {
      const Vec rv = residual(xw);
      const double c = t.dot(xw - anchor) - h;
      if (std::max(rv.cwiseAbs().maxCoeff(), std::abs(c)) <= cfg.corrector_tol)
        return std::make_pair(xw, it);
      if (it == max_iterations) break;
      Mat a(n, n);
      a.topRows(n - 1) = jacobian(xw);
      a.row(n - 1) = t.transpose();
      Vec rhs(n);
      rhs.head(n - 1) = -rv;
      rhs[n - 1] = -c;
      const Eigen::FullPivLU<Mat> lu(a);
      if (!lu.isInvertible()) return std::nullopt;
      const Vec delta = lu.solve(rhs);
      if (!delta.allFinite() || delta.norm() > 1e3 * std::max(1.0, std::abs(h)))
        return std::nullopt;
      xw += delta;
    }
    return std::nullopt;
  };

  const auto init = correct(x, x, ref, 0.0, 2 * cfg.max_corrector_iterations);
  if (!init) {
    out.note = "initial correction failed";
    return out;
  }
  x = init->first;
  Vec tangent = tangent_at(x, ref);
  out.nodes.push_back(x);
  out.levels.push_back(e.eval(x));

  const double exclusion = cfg.start_exclusion < 0 ? 5.0 * cfg.initial_step : cfg.start_exclusion;
  double gmax = e.gradient(x).norm();
  double h = cfg.initial_step;
  double last_h = h;

  auto finish_critical = [&](std::size_t idx, double guard) -> bool {
    const Vec& xc = out.nodes[idx];
    if (offset && (xc - x0).norm() < exclusion) return false;
    const auto root = detail::newton_on_gradient(e, xc, std::min(1e-10, cfg.critical_grad_tol * 1e-3),
                                                 cfg.polish_max_iterations);
    if (!root || (*root - xc).norm() > guard) return false;
    out.nodes.resize(idx + 1);
    out.levels.resize(idx + 1);
    out.nodes.back() = *root;
    out.levels.back() = e.eval(*root);
    out.converged = true;
    out.terminal_gradient_norm = e.gradient(*root).norm();
    out.note = "critical point";
    return true;
  };

  while (static_cast<int>(out.nodes.size()) < cfg.max_steps) {
    std::optional<std::pair<Vec, int>> next;
    while (true) {
      next = correct(x + h * tangent, x, tangent, h, cfg.max_corrector_iterations);
      if (next) break;
      h *= 0.5;
      if (h < cfg.min_step) {
        const double gn = e.gradient(x).norm();
        if ((gn < cfg.polish_trigger * gmax || gn < 10.0 * cfg.critical_grad_tol) &&
            finish_critical(out.nodes.size() - 1, 5.0 * std::max(cfg.initial_step, last_h)))
          return out;
        out.note = "stalled";
        out.terminal_gradient_norm = gn;
        return out;
      }
    }
    last_h = h;
    x = next->first;
    tangent = tangent_at(x, tangent);
    if (next->second <= 3) h = std::min(1.5 * h, cfg.max_step);
    out.nodes.push_back(x);
    out.levels.push_back(e.eval(x));
    const double gn = e.gradient(x).norm();
    gmax = std::max(gmax, gn);
    const std::size_t k = out.nodes.size();
    if (gn < cfg.critical_grad_tol) {
      if (finish_critical(k - 1, 5.0 * std::max(cfg.initial_step, last_h))) return out;
    } else if (cfg.polish && k >= 3) {
      const double gp = e.gradient(out.nodes[k - 2]).norm();
      if (gp < cfg.polish_trigger * gmax && gp < e.gradient(out.nodes[k - 3]).norm() &&
          gp < gn) {
        if (finish_critical(k - 2, 2.0 * std::max(cfg.initial_step, last_h))) return out;
      }
    }
  }
  out.note = "max steps";
  out.terminal_gradient_norm = e.gradient(x).norm();
  return out;
}

struct GadConfig {
  double dt = 1e-4;
  long max_steps = 2000000;
  double grad_tol = 1e-6;
  double divergence_radius = 1e3;
  double max_move = 1e-3;  // per-step displacement cap; dt halves until met
  double initial_offset = 1e-2;
  int record_stride = 25;
};

// Instantaneous gentlest-ascent velocities; exposed for stationarity checks.
inline std::pair<Vec, Vec> gad_velocity(const Energy& e, const Vec& x, const Vec& v) {
  const Vec g = e.gradient(x);
  const Vec xdot = -(g - 2.0 * v * v.dot(g));
  const Vec hv = e.hessian(x) * v;
  const Vec vdot = -(hv - v * v.dot(hv));
  return {xdot, vdot};
}

// Gentlest-ascent dynamics integrated with classic fourth-order steps, the
// ascent direction renormalized after every step.
inline PathResult gad_trajectory(const Energy& e, const Vec& x0, Vec v0, const GadConfig& cfg) {
  PathResult out;
  out.method = "gad";
  if (v0.size() == 0) {
    const Eigen::SelfAdjointEigenSolver<Mat> es(e.hessian(x0));
    v0 = es.eigenvectors().col(0);
  }
  Vec v = v0 / v0.norm();
  Vec x = x0;
  if (e.gradient(x0).norm() < cfg.grad_tol * 10.0) x = x0 + cfg.initial_offset * v;

  out.nodes.push_back(x);
  out.levels.push_back(e.eval(x));

  auto rk4 = [&](const Vec& xs, const Vec& vs, double dt) {
    const auto [k1x, k1v] = gad_velocity(e, xs, vs);
    const auto [k2x, k2v] = gad_velocity(e, xs + 0.5 * dt * k1x, vs + 0.5 * dt * k1v);
    const auto [k3x, k3v] = gad_velocity(e, xs + 0.5 * dt * k2x, vs + 0.5 * dt * k2v);
    const auto [k4x, k4v] = gad_velocity(e, xs + dt * k3x, vs + dt * k3v);
    Vec xn = xs + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    Vec vn = vs + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    return std::make_pair(xn, vn);
  };

  double dt = cfg.dt;
  for (long it = 0; it < cfg.max_steps; ++it) {
    auto [xn, vn] = rk4(x, v, dt);
    int halvings = 0;
    while ((!xn.allFinite() || !vn.allFinite() || (xn - x).norm() > cfg.max_move) &&
           halvings < 40) {
      dt *= 0.5;
      ++halvings;
      std::tie(xn, vn) = rk4(x, v, dt);
    }
    if (halvings == 40) {
      out.note = "step collapse";
      out.terminal_gradient_norm = e.gradient(x).norm();
      return out;
    }
    if (halvings == 0 && (xn - x).norm() < 0.25 * cfg.max_move && dt < cfg.dt) dt *= 2.0;
    x = xn;
    v = vn / vn.norm();
    out.max_unit_deviation = std::max(out.max_unit_deviation, std::abs(v.norm() - 1.0));
    if (it % cfg.record_stride == 0) {
      out.nodes.push_back(x);
      out.levels.push_back(e.eval(x));
    }
    const double gn = e.gradient(x).norm();
    if (gn < cfg.grad_tol) {
      out.nodes.push_back(x);
      out.levels.push_back(e.eval(x));
      out.converged = true;
      out.terminal_gradient_norm = gn;
      out.note = "stationary";
      return out;
    }
    if (x.norm() > cfg.divergence_radius) {
      out.note = "diverged";
      out.terminal_gradient_norm = gn;
      return out;
    }
  }
  out.note = "max steps";
  out.terminal_gradient_norm = e.gradient(x).norm();
  return out;
}

struct StringConfig {
  double dt = 1e-4;
  double tol = 1e-3;  // on max node displacement per unit time
  long max_iterations = 50000;
};

namespace detail {

// Natural cubic spline through (t_i, y_i); evaluated at query points.
inline std::vector<double> spline_resample(const std::vector<double>& t,
                                           const std::vector<double>& y,
                                           const std::vector<double>& tq) {
  const int n = static_cast<int>(t.size());
  std::vector<double> h(n - 1);
  for (int i = 0; i + 1 < n; ++i) h[i] = std::max(t[i + 1] - t[i], 1e-300);
  std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), rhs(n, 0.0);
  for (int i = 1; i + 1 < n; ++i) {
    a[i] = h[i - 1];
    b[i] = 2.0 * (h[i - 1] + h[i]);
    c[i] = h[i];
    rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
  }
  // Thomas algorithm; natural boundary rows are already identity.
  std::vector<double> m(n, 0.0);
  for (int i = 1; i < n; ++i) {
    const double f = a[i] / b[i - 1];
    b[i] -= f * c[i - 1];
    rhs[i] -= f * rhs[i - 1];
  }
  m[n - 1] = rhs[n - 1] / b[n - 1];
  for (int i = n - 2; i >= 0; --i) m[i] = (rhs[i] - c[i] * m[i + 1]) / b[i];

  std::vector<double> out(tq.size());
  int seg = 0;
  for (std::size_t k = 0; k < tq.size(); ++k) {
    const double s = std::min(std::max(tq[k], t.front()), t.back());
    while (seg + 2 < n && t[seg + 1] < s) ++seg;
    const double hh = h[seg];
    const double va = (t[seg + 1] - s) / hh, vb = (s - t[seg]) / hh;
    out[k] = va * y[seg] + vb * y[seg + 1] +
             ((va * va * va - va) * m[seg] + (vb * vb * vb - vb) * m[seg + 1]) * hh * hh / 6.0;
  }
  return out;
}

}  // namespace detail

// Simplified string method: steepest-descent substep on interior nodes, then
// reparameterization to equal arclength through a cubic spline.
inline PathResult string_method(const Energy& e, const Vec& xa, const Vec& xb, int m,
                                const StringConfig& cfg) {
  const int n = e.dim;
  if (m < 3) throw Error("string method needs at least 3 nodes");
  PathResult out;
  out.method = "string";
  std::vector<Vec> nodes(m);
  for (int i = 0; i < m; ++i) nodes[i] = xa + (xb - xa) * (static_cast<double>(i) / (m - 1));

  for (long it = 0; it < cfg.max_iterations; ++it) {
    const std::vector<Vec> before = nodes;
    for (int i = 1; i + 1 < m; ++i) {
      nodes[i] -= cfg.dt * e.gradient(nodes[i]);
      require_finite(nodes[i], "string node");
    }
    // Equal-arclength reparameterization.
    std::vector<double> s(m, 0.0);
    for (int i = 1; i < m; ++i) s[i] = s[i - 1] + (nodes[i] - nodes[i - 1]).norm();
    std::vector<double> sq(m);
    for (int i = 0; i < m; ++i) sq[i] = s.back() * i / (m - 1);
    std::vector<std::vector<double>> coords(n, std::vector<double>(m));
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i) coords[j][i] = nodes[i][j];
    for (int j = 0; j < n; ++j) {
      const auto res = detail::spline_resample(s, coords[j], sq);
      for (int i = 1; i + 1 < m; ++i) nodes[i][j] = res[i];
    }
    double rate = 0.0;
    for (int i = 1; i + 1 < m; ++i)
      rate = std::max(rate, (nodes[i] - before[i]).norm() / cfg.dt);
    if (rate < cfg.tol) {
      out.nodes = nodes;
      for (const auto& p : nodes) out.levels.push_back(e.eval(p));
      out.converged = true;
      double worst = 0.0;
      for (int i = 1; i + 1 < m; ++i) worst = std::max(worst, e.gradient(nodes[i]).norm());
      out.terminal_gradient_norm = worst;
      out.note = "converged after " + std::to_string(it + 1) + " sweeps";
      return out;
    }
  }
  throw MaxIterationsError("string method failed to converge within the iteration budget");
}

// Distance from point p to the segment [a, b].
inline double point_segment_distance(const Vec& p, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double t = std::min(1.0, std::max(0.0, (p - a).dot(ab) / len2));
  return (p - (a + t * ab)).norm();
}

inline double directed_hausdorff(const std::vector<Vec>& from, const std::vector<Vec>& to) {
  double worst = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    if (to.size() == 1) best = (p - to[0]).norm();
    for (std::size_t i = 0; i + 1 < to.size(); ++i)
      best = std::min(best, point_segment_distance(p, to[i], to[i + 1]));
    worst = std::max(worst, best);
  }
  return worst;
}

// Symmetric polyline Hausdorff distance (vertices against segments).
inline double hausdorff_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

inline Mat pairwise_distinctness(const std::vector<PathResult>& paths) {
  const int k = static_cast<int>(paths.size());
  Mat d = Mat::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      d(i, j) = d(j, i) = hausdorff_distance(paths[i].nodes, paths[j].nodes);
  return d;
}

}  // namespace gradex::comparison_paths
