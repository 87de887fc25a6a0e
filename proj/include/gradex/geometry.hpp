// Riemannian machinery on a single chart: metric from the lift Jacobian,
// Christoffel symbols, Riemannian gradient, covariant Hessian operator, and
// the gradient-extremal residual used by the continuation corrector.
#pragma once

#include <gradex/common.hpp>

#include <functional>
#include <vector>

namespace gradex::geometry {

// Everything the residual needs at one chart point: the pullback energy
// Z = E∘ψ with two derivatives, and the lift ψ with two derivatives.
// d2lift[a](i,j) = ∂²ψ_a/∂uⁱ∂uʲ.
struct ChartJet {
  Vec u;
  double z = 0.0;
  Vec dz;
  Mat d2z;
  Vec lift;
  Mat dlift;
  std::vector<Mat> d2lift;
};

struct ChartFunctions {
  int chart_dim = 0;
  int ambient_dim = 0;
  std::function<ChartJet(const Vec&)> jet;
  std::function<bool(const Vec&)> inside;  // validity region; null means everywhere
};

inline bool chart_contains(const ChartFunctions& chart, const Vec& u) {
  return !chart.inside || chart.inside(u);
}

// dg[k](i,j) = ∂g_ij/∂uᵏ; gamma[l](j,k) = Γˡ_jk.
struct MetricData {
  Mat g;
  Mat g_inv;
  std::vector<Mat> dg;
  std::vector<Mat> gamma;
  double condition = 1.0;
};

inline MetricData metric_at(const ChartJet& jet, double condition_limit = 1e10) {
  const int d = static_cast<int>(jet.u.size());
  MetricData m;
  m.g = jet.dlift.transpose() * jet.dlift;
  require_finite(m.g, "metric");

  const Eigen::SelfAdjointEigenSolver<Mat> es(m.g);
  const Vec ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0)
    throw SingularMetricError("metric not positive definite (chart lift rank-deficient)");
  m.condition = ev.maxCoeff() / ev.minCoeff();
  if (m.condition > condition_limit)
    throw SingularMetricError("metric condition number " + format_double(m.condition) +
                              " exceeds limit");
  m.g_inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();

  m.dg.resize(d);
  for (int k = 0; k < d; ++k) {
    Mat b(jet.dlift.rows(), d);  // b(a,i) = ∂(Dψ_{a,i})/∂uᵏ
    for (int a = 0; a < b.rows(); ++a) b.row(a) = jet.d2lift[a].col(k).transpose();
    m.dg[k] = b.transpose() * jet.dlift + jet.dlift.transpose() * b;
  }

  m.gamma.assign(d, Mat::Zero(d, d));
  for (int i = 0; i < d; ++i) {
    Mat lower(d, d);  // lower(j,k) = ½(∂g_ij/∂uᵏ + ∂g_ik/∂uʲ − ∂g_jk/∂uⁱ)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        lower(j, k) = 0.5 * (m.dg[k](i, j) + m.dg[j](i, k) - m.dg[i](j, k));
    for (int l = 0; l < d; ++l) m.gamma[l] += m.g_inv(l, i) * lower;
  }
  return m;
}

inline Vec riemannian_gradient(const MetricData& m, const Vec& dz) { return m.g_inv * dz; }

// |grad Z|_g = sqrt(dZᵀ g⁻¹ dZ); equals the Euclidean norm of the ambient
// tangential gradient, so thresholds on it are chart-independent.
inline double gradient_norm(const MetricData& m, const Vec& dz) {
  return std::sqrt(std::max(0.0, dz.dot(m.g_inv * dz)));
}

// Lower-index covariant Hessian (∇dZ)_ij = ∂²Z/∂uⁱ∂uʲ − Σₗ Γˡ_ij ∂Z/∂uˡ.
inline Mat covariant_hessian_lower(const MetricData& m, const Vec& dz, const Mat& d2z) {
  Mat lower = d2z;
  for (int l = 0; l < dz.size(); ++l) lower -= dz[l] * m.gamma[l];
  return lower;
}

// Operator form Hⁱ_j = Σₖ gⁱᵏ(∇dZ)_kj, so the extremal condition is the
// eigen-equation H·gradZ = λ·gradZ.
inline Mat covariant_hessian(const MetricData& m, const Vec& dz, const Mat& d2z) {
  return m.g_inv * covariant_hessian_lower(m, dz, d2z);
}

struct GEResidual {
  Vec value;  // [Z−L ; H·gradZ − λ·gradZ], length d+1
  Mat jac;    // ∂value/∂(u, λ, L), (d+1)×(d+2)
  double gradient_norm = 0.0;
  Vec lift;   // ψ(u), carried along for callers
};

inline Vec ge_residual_value(const ChartJet& jet, double lambda, double level,
                             double condition_limit, double* grad_norm_out = nullptr) {
  const int d = static_cast<int>(jet.u.size());
  const MetricData m = metric_at(jet, condition_limit);
  const Vec grad = riemannian_gradient(m, jet.dz);
  const Mat lower = covariant_hessian_lower(m, jet.dz, jet.d2z);
  Vec value(d + 1);
  value[0] = jet.z - level;
  value.tail(d) = m.g_inv * (lower * grad) - lambda * grad;
  require_finite(value, "gradient-extremal residual");
  if (grad_norm_out) *grad_norm_out = gradient_norm(m, jet.dz);
  return value;
}

// Residual and Jacobian of the d+1 extremal equations in the d+2 unknowns
// (u, λ, L).  The u-block is differenced centrally with a fresh jet per
// evaluation; the λ and L columns are analytic.
inline GEResidual ge_residual(const ChartFunctions& chart, const Vec& u, double lambda,
                              double level, double fd_step = 1e-6,
                              double condition_limit = 1e10) {
  const int d = static_cast<int>(u.size());
  const ChartJet jet = chart.jet(u);
  const MetricData m = metric_at(jet, condition_limit);
  const Vec grad = riemannian_gradient(m, jet.dz);
  const Mat lower = covariant_hessian_lower(m, jet.dz, jet.d2z);

  GEResidual r;
  r.value.resize(d + 1);
  r.value[0] = jet.z - level;
  r.value.tail(d) = m.g_inv * (lower * grad) - lambda * grad;
  require_finite(r.value, "gradient-extremal residual");
  r.gradient_norm = gradient_norm(m, jet.dz);
  r.lift = jet.lift;

  r.jac.resize(d + 1, d + 2);
  const double h = fd_step * (1.0 + u.cwiseAbs().maxCoeff());
  for (int i = 0; i < d; ++i) {
    Vec up = u, um = u;
    up[i] += h;
    um[i] -= h;
    const Vec fp = ge_residual_value(chart.jet(up), lambda, level, condition_limit);
    const Vec fm = ge_residual_value(chart.jet(um), lambda, level, condition_limit);
    r.jac.col(i) = (fp - fm) / (2.0 * h);
  }
  r.jac.col(d).setZero();
  r.jac.col(d).tail(d) = -grad;
  r.jac.col(d + 1).setZero();
  r.jac(0, d + 1) = -1.0;
  require_finite(r.jac, "gradient-extremal Jacobian");
  return r;
}

}  // namespace gradex::geometry
