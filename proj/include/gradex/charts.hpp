// Analytic charts: the identity chart of a flat domain, charts pulled back
// through a closed-form lift, and the two stereographic charts of the unit
// sphere.
#pragma once

#include <gradex/geometry.hpp>
#include <gradex/potentials.hpp>

namespace gradex::geometry {

// Flat chart: ψ = id, so Z is the ambient energy itself.
inline ChartFunctions identity_chart(const potentials::Energy& e,
                                     std::function<bool(const Vec&)> inside = {}) {
  ChartFunctions chart;
  chart.chart_dim = e.dim;
  chart.ambient_dim = e.dim;
  chart.inside = std::move(inside);
  chart.jet = [e](const Vec& u) {
    const int d = e.dim;
    ChartJet jet;
    jet.u = u;
    jet.z = e.eval(u);
    jet.dz = e.gradient(u);
    jet.d2z = e.hessian(u);
    jet.lift = u;
    jet.dlift = Mat::Identity(d, d);
    jet.d2lift.assign(d, Mat::Zero(d, d));
    return jet;
  };
  return chart;
}

// Closed-form lift ψ: ℝᵈ→ℝⁿ with its first two derivative tensors.
struct AnalyticLift {
  int chart_dim = 0;
  int ambient_dim = 0;
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
  std::function<std::vector<Mat>(const Vec&)> hessians;  // per ambient coordinate
};

// Chart whose pullback energy is E∘ψ assembled by the chain rule.
inline ChartFunctions pullback_chart(const AnalyticLift& lift, const potentials::Energy& ambient,
                                     std::function<bool(const Vec&)> inside = {}) {
  ChartFunctions chart;
  chart.chart_dim = lift.chart_dim;
  chart.ambient_dim = lift.ambient_dim;
  chart.inside = std::move(inside);
  chart.jet = [lift, ambient](const Vec& u) {
    ChartJet jet;
    jet.u = u;
    jet.lift = lift.value(u);
    jet.dlift = lift.jacobian(u);
    jet.d2lift = lift.hessians(u);
    jet.z = ambient.eval(jet.lift);
    const Vec ge = ambient.gradient(jet.lift);
    jet.dz = jet.dlift.transpose() * ge;
    Mat d2z = jet.dlift.transpose() * ambient.hessian(jet.lift) * jet.dlift;
    for (int a = 0; a < jet.lift.size(); ++a) d2z += ge[a] * jet.d2lift[a];
    jet.d2z = 0.5 * (d2z + d2z.transpose()).eval();
    return jet;
  };
  return chart;
}

enum class SpherePole { South, North };

// Stereographic chart of the unit sphere centered on the given pole (i.e.
// projecting from the opposite pole).  South: ψ(u,v) = (2u, 2v, s−1)/(s+1)
// with s = u²+v²; North mirrors the z component.
inline AnalyticLift stereographic_lift(SpherePole centered_on) {
  const double zsign = centered_on == SpherePole::South ? 1.0 : -1.0;
  AnalyticLift lift;
  lift.chart_dim = 2;
  lift.ambient_dim = 3;
  lift.value = [zsign](const Vec& u) {
    const double s = u.squaredNorm();
    Vec p(3);
    p << 2.0 * u[0] / (s + 1.0), 2.0 * u[1] / (s + 1.0), zsign * (s - 1.0) / (s + 1.0);
    return p;
  };
  lift.jacobian = [zsign](const Vec& u) {
    const double den = u.squaredNorm() + 1.0;
    const double d2 = den * den;
    Mat j(3, 2);
    j << 2.0 / den - 4.0 * u[0] * u[0] / d2, -4.0 * u[0] * u[1] / d2,
         -4.0 * u[0] * u[1] / d2, 2.0 / den - 4.0 * u[1] * u[1] / d2,
         zsign * 4.0 * u[0] / d2, zsign * 4.0 * u[1] / d2;
    return j;
  };
  lift.hessians = [zsign](const Vec& u) {
    const double den = u.squaredNorm() + 1.0;
    const double d2 = den * den, d3 = d2 * den;
    const double a = u[0], b = u[1];
    Mat h1(2, 2), h2(2, 2), h3(2, 2);
    h1 << -12.0 * a / d2 + 16.0 * a * a * a / d3, -4.0 * b / d2 + 16.0 * a * a * b / d3,
          -4.0 * b / d2 + 16.0 * a * a * b / d3, -4.0 * a / d2 + 16.0 * a * b * b / d3;
    h2 << -4.0 * b / d2 + 16.0 * a * a * b / d3, -4.0 * a / d2 + 16.0 * a * b * b / d3,
          -4.0 * a / d2 + 16.0 * a * b * b / d3, -12.0 * b / d2 + 16.0 * b * b * b / d3;
    h3 << zsign * (4.0 / d2 - 16.0 * a * a / d3), zsign * (-16.0 * a * b / d3),
          zsign * (-16.0 * a * b / d3), zsign * (4.0 / d2 - 16.0 * b * b / d3);
    return std::vector<Mat>{h1, h2, h3};
  };
  return lift;
}

// Inverse of the stereographic lift, defined away from the projection pole.
inline Vec stereographic_project(SpherePole centered_on, const Vec& p) {
  const double zsign = centered_on == SpherePole::South ? 1.0 : -1.0;
  const double den = 1.0 - zsign * p[2];
  if (std::abs(den) < 1e-12) throw DomainError("stereographic projection pole reached");
  Vec u(2);
  u << p[0] / den, p[1] / den;
  return u;
}

}  // namespace gradex::geometry
