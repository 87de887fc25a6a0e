// Pseudo-arclength continuation of the gradient-extremal system on one
// chart: Euler predictor along the Jacobian null space, full-Newton
// corrector with an arclength hyperplane constraint, adaptive step size,
// and termination classification.
#pragma once

#include <gradex/geometry.hpp>

#include <optional>
#include <utility>
#include <vector>

namespace gradex::continuation {

using geometry::ChartFunctions;
using geometry::ChartJet;
using geometry::GEResidual;
using geometry::MetricData;

enum class EigenBranch { Smallest, Largest };
enum class Termination { ChartBoundary, CriticalPoint, MaxSteps, Stalled };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::ChartBoundary: return "ChartBoundary";
    case Termination::CriticalPoint: return "CriticalPoint";
    case Termination::MaxSteps: return "MaxSteps";
    case Termination::Stalled: return "Stalled";
  }
  return "?";
}

struct ContinuationConfig {
  double initial_step = 1e-2;
  double min_step = 1e-8;
  double max_step = 0.1;
  double corrector_tol = 1e-8;
  int max_corrector_iterations = 8;
  int max_steps = 1000;
  double critical_grad_tol = 1e-4;  // |grad Z|_g threshold for CriticalPoint
  EigenBranch branch = EigenBranch::Smallest;

  // The arclength metric weighs the λ and L components by 1/scale so that
  // systems whose eigenvalues or energies dwarf the chart units still take
  // steps of size h along the curve geometry.  1.0 keeps the plain norm.
  double lambda_scale = 1.0;
  double level_scale = 1.0;

  // Snap to the critical point with damped Newton on DZ = 0 once the
  // gradient norm dips; required to hit tight terminal tolerances, since
  // discrete steps rarely land inside the strict threshold.
  bool polish = true;
  int polish_max_iterations = 40;
  double polish_trigger = 0.25;  // candidate when grad dips below trigger×running max

  // Radius around a critical starting point inside which detections are
  // ignored, so a curve leaving a minimum is not immediately re-terminated.
  double start_exclusion = -1.0;  // <0 → 5×initial_step

  // Veto for detected critical points of Z that are not fixed points of the
  // underlying system (e.g. maxima of |X|² along the curve); vetoed points
  // are stepped across instead of terminating.
  std::function<bool(const Vec& u, const ChartJet& jet)> accept_critical;

  double fd_step = 1e-6;
  double condition_limit = 1e10;
};

struct GEState {
  Vec u;
  double lambda = 0.0;
  double level = 0.0;
  Vec tangent;  // d+2 components (u, λ, L), unit in the weighted norm
  double residual_norm = 0.0;
  double gradient_norm = 0.0;
  double step_used = 0.0;
  Vec ambient;  // ψ(u)
};

struct GESegment {
  std::vector<GEState> states;
  Termination termination = Termination::MaxSteps;
  Vec exit_point;     // chart coords of the final state
  Vec exit_velocity;  // chart direction at exit, unit Euclidean norm
  int corrector_retries = 0;
};

namespace detail {

inline Vec arclength_weights(const ContinuationConfig& cfg, int d) {
  Vec w = Vec::Ones(d + 2);
  w[d] = 1.0 / cfg.lambda_scale;
  w[d + 1] = 1.0 / cfg.level_scale;
  return w;
}

inline double weighted_norm(const Vec& w, const Vec& x) { return (w.asDiagonal() * x).norm(); }

// Unit tangent spanning the null space of the (d+1)×(d+2) residual Jacobian,
// taken as the last column of the full QR factor of Jᵀ.
inline Vec nullspace_tangent(const Mat& jac, const Vec& weights) {
  const Eigen::HouseholderQR<Mat> qr(jac.transpose());
  const Mat q = qr.householderQ();
  Vec t = q.col(q.cols() - 1);
  const double n = weighted_norm(weights, t);
  if (!(n > 0.0) || !t.allFinite()) throw NonFiniteError("degenerate continuation tangent");
  return t / n;
}

struct Corrected {
  Vec w;  // (u, λ, L)
  double residual_norm = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  Vec lift;
  Mat jac;  // residual Jacobian at the converged point
};

// Newton iteration on [ge_residual; arclength constraint] = 0.  The
// constraint anchors the solution to the hyperplane through `anchor` with
// weighted normal along `tangent` at offset h.
inline std::optional<Corrected> correct(const ChartFunctions& chart, const Vec& start,
                                        const Vec& anchor, const Vec& tangent, double h,
                                        const Vec& weights, const ContinuationConfig& cfg,
                                        int max_iterations) {
  const int d = chart.chart_dim;
  const Vec normal = weights.cwiseProduct(weights).cwiseProduct(tangent);
  Vec w = start;
  for (int it = 0; it <= max_iterations; ++it) {
    GEResidual r;
    try {
      r = geometry::ge_residual(chart, w.head(d), w[d], w[d + 1], cfg.fd_step,
                                cfg.condition_limit);
    } catch (const Error&) {
      return std::nullopt;
    }
    const double c = normal.dot(w - anchor) - h;
    const double res = std::max(r.value.cwiseAbs().maxCoeff(), std::abs(c));
    if (res <= cfg.corrector_tol) {
      Corrected out;
      out.w = w;
      out.residual_norm = res;
      out.gradient_norm = r.gradient_norm;
      out.iterations = it;
      out.lift = r.lift;
      out.jac = r.jac;
      return out;
    }
    if (it == max_iterations) return std::nullopt;

    Mat a(d + 2, d + 2);
    a.topRows(d + 1) = r.jac;
    a.row(d + 1) = normal.transpose();
    Vec rhs(d + 2);
    rhs.head(d + 1) = -r.value;
    rhs[d + 1] = -c;
    const Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible()) return std::nullopt;
    const Vec delta = lu.solve(rhs);
    if (!delta.allFinite() ||
        weighted_norm(weights, delta) > 1e3 * std::max(1.0, std::abs(h)))
      return std::nullopt;
    w += delta;
  }
  return std::nullopt;
}

// Damped Newton on DZ(u) = 0 with the analytic chart Hessian; snaps a
// near-critical sample onto the critical point itself.
inline std::optional<ChartJet> polish_critical(const ChartFunctions& chart, const Vec& u0,
                                               const ContinuationConfig& cfg) {
  const double target = std::min(1e-10, cfg.critical_grad_tol * 1e-3);
  Vec u = u0;
  ChartJet jet;
  try {
    jet = chart.jet(u);
  } catch (const Error&) {
    return std::nullopt;
  }
  for (int it = 0; it < cfg.polish_max_iterations; ++it) {
    double gn;
    try {
      gn = geometry::gradient_norm(geometry::metric_at(jet, cfg.condition_limit), jet.dz);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (gn <= target) return jet;
    const Eigen::FullPivLU<Mat> lu(jet.d2z);
    if (!lu.isInvertible()) return std::nullopt;
    const Vec step = lu.solve(-jet.dz);
    double alpha = 1.0;
    bool accepted = false;
    for (int cut = 0; cut < 25 && !accepted; ++cut) {
      try {
        ChartJet trial = chart.jet(u + alpha * step);
        if (trial.dz.norm() < jet.dz.norm()) {
          u += alpha * step;
          jet = std::move(trial);
          accepted = true;
        }
      } catch (const Error&) {
      }
      if (!accepted) alpha *= 0.5;
    }
    if (!accepted) return std::nullopt;
  }
  double gn;
  try {
    gn = geometry::gradient_norm(geometry::metric_at(jet, cfg.condition_limit), jet.dz);
  } catch (const Error&) {
    return std::nullopt;
  }
  return gn <= target ? std::optional<ChartJet>(jet) : std::nullopt;
}

}  // namespace detail

// Eigenvector of the covariant Hessian pencil (∇dZ, g) for the chosen branch;
// the canonical initial direction at a critical point.
inline Vec initial_direction(const ChartFunctions& chart, const Vec& u, EigenBranch branch,
                             double condition_limit = 1e10) {
  const ChartJet jet = chart.jet(u);
  const MetricData m = geometry::metric_at(jet, condition_limit);
  const Mat lower = geometry::covariant_hessian_lower(m, jet.dz, jet.d2z);
  const Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(lower, m.g);
  const int idx = branch == EigenBranch::Smallest ? 0 : chart.chart_dim - 1;
  Vec v = es.eigenvectors().col(idx);
  return v / v.norm();
}

// Corrected starting state.  If q0 itself is critical the start is offset by
// one step along v0 first (the extremal system is singular at dZ = 0).
// Returns the state and whether the offset was applied.
inline std::pair<GEState, bool> init_state(const ChartFunctions& chart, const Vec& q0,
                                           const Vec& v0, const ContinuationConfig& cfg) {
  const int d = chart.chart_dim;
  if (!(v0.norm() > 0.0)) throw Error("initial direction must be nonzero");
  const Vec dir = v0 / v0.norm();
  const Vec weights = detail::arclength_weights(cfg, d);

  // Seed the corrector from a given start point: eigenvalue from the pencil
  // there, level from the surrogate energy, tangent guess along dir.
  auto attempt = [&](const Vec& q) -> std::optional<detail::Corrected> {
    const ChartJet jet = chart.jet(q);
    const MetricData m = geometry::metric_at(jet, cfg.condition_limit);
    const Mat lower = geometry::covariant_hessian_lower(m, jet.dz, jet.d2z);
    const Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(lower, m.g);
    const double lambda0 =
        cfg.branch == EigenBranch::Smallest ? es.eigenvalues()(0) : es.eigenvalues()(d - 1);

    Vec w0(d + 2);
    w0.head(d) = q;
    w0[d] = lambda0;
    w0[d + 1] = jet.z;

    // Anchor plane normal to the curve's own tangent at the seed.  The
    // supplied direction can meet the curve at a shallow angle (it is often a
    // chord carried over from another chart), and a plane near-tangent to the
    // curve lets the corrector slide far along it; the Jacobian nullspace is
    // transversal by construction.  dir still orients the march.
    Vec t_guess;
    try {
      const GEResidual r0 =
          geometry::ge_residual(chart, q, lambda0, jet.z, cfg.fd_step, cfg.condition_limit);
      t_guess = detail::nullspace_tangent(r0.jac, weights);
    } catch (const Error&) {
      t_guess = Vec();
    }
    if (t_guess.size() != d + 2 || t_guess.head(d).norm() < 1e-8) {
      // Degenerate local tangent (the any-λ line at a critical point); fall
      // back to the supplied direction, whose plane that line never crosses.
      t_guess.resize(d + 2);
      t_guess.head(d) = dir;
      t_guess[d] = 0.0;
      t_guess[d + 1] = jet.dz.dot(dir);
      t_guess /= detail::weighted_norm(weights, t_guess);
    }
    if (t_guess.head(d).dot(dir) < 0.0) t_guess = -t_guess;

    auto corrected = detail::correct(chart, w0, w0, t_guess, 0.0, weights, cfg,
                                     2 * cfg.max_corrector_iterations);
    // A start that corrects to a point outside the validity region has been
    // captured by an extrapolation artifact, not the curve through q0.
    if (corrected && !geometry::chart_contains(chart, corrected->w.head(d)))
      corrected.reset();
    return corrected;
  };

  const ChartJet jet0 = chart.jet(q0);
  const MetricData m0 = geometry::metric_at(jet0, cfg.condition_limit);
  // The extremal residual vanishes for every λ exactly at a critical point,
  // so a corrector seeded close enough can slide into it and start the trace
  // on that degenerate line.  Estimate the distance to the nearest critical
  // point as |grad|/|curvature| and offset whenever it is within one step:
  // the constraint hyperplane through the offset start then keeps the
  // critical point out of the corrector's reach.
  const Mat lower0 = geometry::covariant_hessian_lower(m0, jet0.dz, jet0.d2z);
  const Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es0(lower0, m0.g);
  const double curvature = es0.eigenvalues().cwiseAbs().maxCoeff();
  const double near_critical =
      std::max(cfg.critical_grad_tol, curvature * cfg.initial_step);
  bool offset = geometry::gradient_norm(m0, jet0.dz) < near_critical;

  std::optional<detail::Corrected> corrected;
  if (!offset) corrected = attempt(q0);
  if (!corrected) {
    // Either q0 was flagged critical outright, or the correction from it
    // failed.  The latter happens on learned charts whose own critical point
    // sits slightly displaced from q0: the gradient there can clear the
    // threshold while q0 still lies in the degenerate zone of the extremal
    // system.  Stepping once along the direction escapes that zone.
    try {
      corrected = attempt(q0 + cfg.initial_step * dir);
      offset = true;
    } catch (const Error&) {
    }
  }
  if (!corrected) throw Error("initial state correction failed");

  GEState s;
  s.u = corrected->w.head(d);
  s.lambda = corrected->w[d];
  s.level = corrected->w[d + 1];
  s.residual_norm = corrected->residual_norm;
  s.gradient_norm = corrected->gradient_norm;
  s.ambient = corrected->lift;
  s.step_used = 0.0;
  Vec t = detail::nullspace_tangent(corrected->jac, weights);
  if (t.head(d).dot(dir) < 0.0) t = -t;
  s.tangent = t;
  return {s, offset};
}

// One accepted predictor-corrector step; h is adapted in place.  Throws
// Error on step-size underflow (caller maps it to Stalled).
inline GEState step(const GEState& state, const ChartFunctions& chart,
                    const ContinuationConfig& cfg, double& h, int* retries = nullptr) {
  const int d = chart.chart_dim;
  const Vec weights = detail::arclength_weights(cfg, d);
  Vec w_prev(d + 2);
  w_prev.head(d) = state.u;
  w_prev[d] = state.lambda;
  w_prev[d + 1] = state.level;

  while (true) {
    const Vec predicted = w_prev + h * state.tangent;
    auto corrected = detail::correct(chart, predicted, w_prev, state.tangent, h, weights,
                                     cfg, cfg.max_corrector_iterations);
    // Arclength consistency: an accepted step must stay within 2h of its
    // predecessor.  The corrector can otherwise be captured by a distant
    // solution branch — the any-λ line through a critical point is a whole
    // continuum of spurious solutions — and such a capture shows up as a
    // displacement far beyond the step size.  Treat it as a failed
    // correction so the step shrinks toward the genuine local branch.
    if (corrected && detail::weighted_norm(weights, corrected->w - w_prev) > 2.0 * h)
      corrected.reset();
    if (corrected) {
      GEState next;
      next.u = corrected->w.head(d);
      next.lambda = corrected->w[d];
      next.level = corrected->w[d + 1];
      next.residual_norm = corrected->residual_norm;
      next.gradient_norm = corrected->gradient_norm;
      next.ambient = corrected->lift;
      next.step_used = h;
      Vec t = detail::nullspace_tangent(corrected->jac, weights);
      const double align = weights.cwiseProduct(weights).cwiseProduct(t).dot(state.tangent);
      if (align < 0.0) t = -t;
      next.tangent = t;
      if (corrected->iterations <= 3) h = std::min(1.5 * h, cfg.max_step);
      return next;
    }
    if (retries) ++(*retries);
    h *= 0.5;
    if (h < cfg.min_step) throw Error("continuation step size underflow");
  }
}

// Number of sign changes of ΔL along the level sequence, skipping steps with
// |ΔL| below an absolute floor.
inline int turning_points(const std::vector<double>& levels, double floor = 1e-12) {
  int count = 0;
  double prev = 0.0;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const double delta = levels[i] - levels[i - 1];
    if (std::abs(delta) < floor) continue;
    const double s = delta > 0 ? 1.0 : -1.0;
    if (prev != 0.0 && s != prev) ++count;
    prev = s;
  }
  return count;
}

inline int turning_points(const GESegment& seg, double floor = 1e-12) {
  std::vector<double> levels;
  levels.reserve(seg.states.size());
  for (const auto& s : seg.states) levels.push_back(s.level);
  return turning_points(levels, floor);
}

// Trace the gradient extremal through q0 with initial direction v0 until the
// chart boundary, a critical point, the step budget, or a stall.
inline GESegment resolve_extremal_curve(const ChartFunctions& chart, const Vec& q0,
                                        const Vec& v0, const ContinuationConfig& cfg) {
  const int d = chart.chart_dim;
  GESegment seg;
  auto finish = [&](Termination t, const GEState& exit_state) {
    seg.termination = t;
    seg.exit_point = exit_state.u;
    Vec v = exit_state.tangent.head(d);
    const double n = v.norm();
    seg.exit_velocity = n > 0 ? Vec(v / n) : v;
    return seg;
  };

  auto [state, offset] = init_state(chart, q0, v0, cfg);
  if (offset) {
    // Keep the exact critical start as the first state; with L = Z(q0) and
    // dZ ≈ 0 it satisfies the extremal equations to the same accuracy.
    GEState s0;
    const ChartJet jet0 = chart.jet(q0);
    const MetricData m0 = geometry::metric_at(jet0, cfg.condition_limit);
    s0.u = q0;
    s0.lambda = state.lambda;
    s0.level = jet0.z;
    s0.tangent = state.tangent;
    s0.gradient_norm = geometry::gradient_norm(m0, jet0.dz);
    s0.residual_norm =
        geometry::ge_residual_value(jet0, s0.lambda, s0.level, cfg.condition_limit)
            .cwiseAbs()
            .maxCoeff();
    s0.ambient = jet0.lift;
    s0.step_used = 0.0;
    seg.states.push_back(std::move(s0));
  }
  seg.states.push_back(state);

  const double exclusion = cfg.start_exclusion < 0 ? 5.0 * cfg.initial_step : cfg.start_exclusion;
  const bool excluded_start = offset;
  double gmax = state.gradient_norm;
  double h = cfg.initial_step;
  std::vector<Vec> vetoed;  // critical points rejected by accept_critical

  auto near_vetoed = [&](const Vec& u) {
    for (const auto& p : vetoed)
      if ((u - p).norm() < 2.0 * cfg.max_step) return true;
    return false;
  };
  auto in_start_exclusion = [&](const Vec& u) {
    return excluded_start && (u - q0).norm() < exclusion;
  };

  // Try to terminate at the critical point suspected near states[idx];
  // returns true when the segment is finished.
  auto try_finish_critical = [&](std::size_t idx, double guard) -> bool {
    const Vec& uc = seg.states[idx].u;
    if (in_start_exclusion(uc) || near_vetoed(uc)) return false;
    const auto jet = detail::polish_critical(chart, uc, cfg);
    if (!jet) return false;
    if ((jet->u - uc).norm() > guard) return false;
    if (!geometry::chart_contains(chart, jet->u)) return false;
    if (cfg.accept_critical && !cfg.accept_critical(jet->u, *jet)) {
      vetoed.push_back(jet->u);
      return false;
    }
    GEState final = seg.states[idx];
    final.u = jet->u;
    final.level = jet->z;
    try {
      const MetricData m = geometry::metric_at(*jet, cfg.condition_limit);
      const Mat lower = geometry::covariant_hessian_lower(m, jet->dz, jet->d2z);
      const Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(lower, m.g);
      // λ is ill-determined at dZ = 0; report the pencil eigenvalue nearest
      // the branch value carried in.
      int best = 0;
      for (int i = 1; i < d; ++i)
        if (std::abs(es.eigenvalues()(i) - final.lambda) <
            std::abs(es.eigenvalues()(best) - final.lambda))
          best = i;
      final.lambda = es.eigenvalues()(best);
      final.gradient_norm = geometry::gradient_norm(m, jet->dz);
    } catch (const Error&) {
      return false;
    }
    final.residual_norm =
        geometry::ge_residual_value(*jet, final.lambda, final.level, cfg.condition_limit)
            .cwiseAbs()
            .maxCoeff();
    final.ambient = jet->lift;
    seg.states.resize(idx + 1);
    seg.states.back() = std::move(final);
    finish(Termination::CriticalPoint, seg.states.back());
    return true;
  };

  while (static_cast<int>(seg.states.size()) < cfg.max_steps) {
    const GEState& current = seg.states.back();
    GEState next;
    try {
      next = step(current, chart, cfg, h, &seg.corrector_retries);
    } catch (const Error&) {
      // Step-size underflow.  Either we are grinding against the corrector
      // singularity at a genuine critical point (finish there), against a
      // vetoed one (leap over it along the tangent), or truly stuck.
      if ((current.gradient_norm < cfg.polish_trigger * gmax ||
           current.gradient_norm < 10.0 * cfg.critical_grad_tol) &&
          try_finish_critical(seg.states.size() - 1,
                              5.0 * std::max(cfg.initial_step, current.step_used)))
        return seg;
      bool jumped = false;
      for (const auto& p : vetoed) {
        const double dist = (current.u - p).norm();
        if (dist > 3.0 * cfg.max_step) continue;
        Vec w_prev(d + 2);
        w_prev.head(d) = current.u;
        w_prev[d] = current.lambda;
        w_prev[d + 1] = current.level;
        const Vec weights = detail::arclength_weights(cfg, d);
        for (double factor : {4.0, 8.0, 16.0}) {
          const double jump = factor * (dist + cfg.initial_step);
          const auto hop =
              detail::correct(chart, w_prev + jump * current.tangent, w_prev, current.tangent,
                              jump, weights, cfg, 2 * cfg.max_corrector_iterations);
          if (!hop) continue;
          GEState hopped;
          hopped.u = hop->w.head(d);
          hopped.lambda = hop->w[d];
          hopped.level = hop->w[d + 1];
          hopped.residual_norm = hop->residual_norm;
          hopped.gradient_norm = hop->gradient_norm;
          hopped.ambient = hop->lift;
          hopped.step_used = jump;
          try {
            Vec t = detail::nullspace_tangent(hop->jac, weights);
            const double align =
                weights.cwiseProduct(weights).cwiseProduct(t).dot(current.tangent);
            if (align < 0.0) t = -t;
            hopped.tangent = t;
          } catch (const Error&) {
            continue;
          }
          if (!geometry::chart_contains(chart, hopped.u)) continue;
          seg.states.push_back(std::move(hopped));
          h = cfg.initial_step;
          jumped = true;
          break;
        }
        if (jumped) break;
      }
      if (jumped) continue;
      return finish(Termination::Stalled, current);
    }

    if (!geometry::chart_contains(chart, next.u))
      return finish(Termination::ChartBoundary, current);

    seg.states.push_back(std::move(next));
    gmax = std::max(gmax, seg.states.back().gradient_norm);

    const std::size_t n = seg.states.size();
    if (seg.states.back().gradient_norm < cfg.critical_grad_tol) {
      if (try_finish_critical(n - 1, 5.0 * std::max(cfg.initial_step,
                                                    seg.states.back().step_used)))
        return seg;
    } else if (cfg.polish && n >= 3) {
      // Interior dip of |grad Z|: the curve hopped over a critical point
      // without entering the strict threshold.
      const GEState& mid = seg.states[n - 2];
      if (mid.gradient_norm < cfg.polish_trigger * gmax &&
          mid.gradient_norm < seg.states[n - 3].gradient_norm &&
          mid.gradient_norm < seg.states[n - 1].gradient_norm) {
        if (try_finish_critical(n - 2,
                                2.0 * std::max({cfg.initial_step, mid.step_used,
                                                seg.states[n - 1].step_used})))
          return seg;
      }
    }
  }
  return finish(Termination::MaxSteps, seg.states.back());
}

}  // namespace gradex::continuation
