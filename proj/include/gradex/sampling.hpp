// Point-cloud generation: Gaussian ambient perturbations of a seed point,
// each relaxed onto the slow manifold by integrating the full dynamics for a
// short time.
#pragma once

#include <gradex/potentials.hpp>

#include <cmath>
#include <functional>
#include <limits>

namespace gradex::sampling {

struct Dynamics {
  int dim = 0;
  std::function<Vec(const Vec&)> velocity;
};

struct SamplerConfig {
  int count = 500;
  double sigma = 0.05;
  double tau = 0.07;
  double dt = 1e-3;
  std::uint64_t seed = 0;
};

struct PointCloud {
  Mat points;  // one sample per row
  Vec center;  // the seed point the cloud was grown around
  double sigma = 0.0;
  double tau = 0.0;

  int size() const { return static_cast<int>(points.rows()); }
  int ambient_dim() const { return static_cast<int>(points.cols()); }

  // Slack of a fraction of σ absorbs curvature: when the cloud hugs a curved
  // surface, the seed sits at the cap apex and can exceed the strict box along
  // the normal axis by O(σ²) even though the cloud surrounds it.
  bool center_in_bounding_box(double slack = -1.0) const {
    const double tol = slack >= 0.0 ? slack : 1e-12 + 0.1 * sigma;
    for (int j = 0; j < points.cols(); ++j)
      if (center[j] < points.col(j).minCoeff() - tol ||
          center[j] > points.col(j).maxCoeff() + tol)
        return false;
    return true;
  }
};

// Classic fourth-order integration of dx/dt = velocity(x) over [0, tau] with
// uniform steps of at most dt.  When max_move is finite, a step whose
// initial-slope displacement h*|v| would exceed it is subdivided: steep
// energies push the relaxation velocity orders of magnitude above its
// on-manifold scale, and a fixed step there sits outside the explicit
// scheme's stability region, where the iterates hop chaotically and can lock
// into fixed points of the discrete update far from any equilibrium of the
// flow.  Capping the displacement keeps each step inside the basin it
// started in; the step size returns to dt as the trajectory relaxes.
inline Vec rk4_integrate(const Dynamics& dynamics, Vec x, double tau, double dt,
                         double blowup_norm = 1e6,
                         double max_move = std::numeric_limits<double>::infinity()) {
  if (tau <= 0.0) return x;
  const bool capped = std::isfinite(max_move) && max_move > 0.0;
  const long steps = std::max(1L, static_cast<long>(std::ceil(tau / dt - 1e-12)));
  const double h = tau / static_cast<double>(steps);
  for (long s = 0; s < steps; ++s) {
    Vec k1 = dynamics.velocity(x);
    long sub = 1;
    if (capped) {
      const double travel = h * k1.norm();
      if (travel > max_move)
        sub = std::min(static_cast<long>(std::ceil(travel / max_move)), 10000L);
    }
    const double hs = h / static_cast<double>(sub);
    for (long q = 0; q < sub; ++q) {
      if (q > 0) k1 = dynamics.velocity(x);
      const Vec k2 = dynamics.velocity(x + 0.5 * hs * k1);
      const Vec k3 = dynamics.velocity(x + 0.5 * hs * k2);
      const Vec k4 = dynamics.velocity(x + hs * k3);
      x += hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!x.allFinite() || x.norm() > blowup_norm)
        throw IntegrationBlowupError("trajectory left the integration domain");
    }
  }
  return x;
}

inline PointCloud sample_neighborhood(const Vec& p, const SamplerConfig& cfg,
                                      const Dynamics& dynamics) {
  if (cfg.count < 1 || !(cfg.sigma > 0.0) || cfg.tau < 0.0 || !(cfg.dt > 0.0))
    throw ConfigError("sampler needs count >= 1, sigma > 0, tau >= 0, dt > 0");
  if (cfg.tau / cfg.dt > 1e6) throw ConfigError("sampler step budget tau/dt exceeds 1e6");
  require_finite(p, "sampler seed point");
  const int n = static_cast<int>(p.size());
  Rng rng(cfg.seed);
  PointCloud cloud;
  cloud.points.resize(cfg.count, n);
  cloud.center = p;
  cloud.sigma = cfg.sigma;
  cloud.tau = cfg.tau;
  for (int i = 0; i < cfg.count; ++i) {
    Vec x = p + cfg.sigma * rng.normal_vector(n);
    // Cap per-step travel at half the perturbation scale: the cloud only
    // needs to relax by O(sigma), so any larger jump is integrator overshoot.
    x = rk4_integrate(dynamics, std::move(x), cfg.tau, cfg.dt, 1e6, 0.5 * cfg.sigma);
    cloud.points.row(i) = x.transpose();
  }
  return cloud;
}

// Fast–slow system whose slow manifold is the unit sphere: strong radial
// restoring plus the tangential gradient descent of the given energy.
inline Dynamics fast_slow_sphere_dynamics(const potentials::Energy& energy,
                                          double k_fast = 100.0) {
  Dynamics d;
  d.dim = 3;
  d.velocity = [energy, k_fast](const Vec& x) -> Vec {
    const double r = x.norm();
    if (r < 1e-9) throw DomainError("fast-slow sphere dynamics undefined at the origin");
    const Vec radial = x / r;
    const Vec g = energy.gradient(x);
    return -k_fast * (r - 1.0) * radial - (g - radial * radial.dot(g));
  };
  return d;
}

inline Dynamics make_demo_dynamics(const std::string& kind) {
  if (kind == "mb-sphere") return fast_slow_sphere_dynamics(potentials::mb_on_sphere());
  throw ConfigError("unknown demo dynamics: " + kind);
}

// Dynamics that leave every point fixed; used when clouds should stay where
// the perturbation put them.
inline Dynamics frozen_dynamics(int dim) {
  Dynamics d;
  d.dim = dim;
  d.velocity = [dim](const Vec&) { return Vec::Zero(dim); };
  return d;
}

}  // namespace gradex::sampling
