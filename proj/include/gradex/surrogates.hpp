// Gaussian-process surrogates: shared-hyperparameter multi-output regression
// with analytic first and second derivatives of the posterior mean, plus the
// chart bundle (embedding + lift GP + energy GP) and its covariance-based
// boundary test.
#pragma once

#include <gradex/geometry.hpp>
#include <gradex/manifold_learning.hpp>

#include <algorithm>
#include <atomic>
#include <memory>
#include <optional>
#include <vector>

namespace gradex::surrogates {

enum class KernelFamily { SquaredExponential, Matern52 };

struct GPHyperparameters {
  Vec length_scales;
  double signal_variance = 1.0;
  double noise = 1e-10;
};

struct GPOptions {
  KernelFamily kernel = KernelFamily::SquaredExponential;
  int restarts = 3;
  int max_evaluations = 120;      // Nelder-Mead budget per restart
  int hyper_subset = 200;         // fit hyperparameters on ≤ this many rows (0 = all)
  double noise = -1.0;            // η; <0 → 1e−8·target variance (floored at 1e−10)
  std::optional<GPHyperparameters> fixed;
  std::uint64_t seed = 0;
};

struct GPModel {
  KernelFamily kernel = KernelFamily::SquaredExponential;
  Mat inputs;        // m×d, deduplicated
  Mat targets;       // m×q
  Vec target_mean;   // q; the GP is fitted on centered targets
  GPHyperparameters hyper;
  Mat chol_lower;    // L with LLᵀ = K + ηI
  Mat weights;       // (K+ηI)⁻¹ (targets − mean)
  double log_marginal = 0.0;

  int input_dim() const { return static_cast<int>(inputs.cols()); }
  int output_dim() const { return static_cast<int>(targets.cols()); }
  int count() const { return static_cast<int>(inputs.rows()); }
};

namespace detail {

inline double kernel_value(KernelFamily family, const GPHyperparameters& hp, double r2) {
  if (family == KernelFamily::SquaredExponential)
    return hp.signal_variance * std::exp(-0.5 * r2);
  const double r = std::sqrt(r2);
  const double a = std::sqrt(5.0) * r;
  return hp.signal_variance * (1.0 + a + 5.0 * r2 / 3.0) * std::exp(-a);
}

// Scaled squared distance r² = Σ ((x−y)/ℓ)².
inline double scaled_sq_dist(const GPHyperparameters& hp, const Eigen::Ref<const Vec>& x,
                             const Eigen::Ref<const Vec>& y) {
  return ((x - y).array() / hp.length_scales.array()).square().sum();
}

inline Mat kernel_matrix(KernelFamily family, const GPHyperparameters& hp, const Mat& a) {
  const int m = static_cast<int>(a.rows());
  Mat k(m, m);
  for (int i = 0; i < m; ++i) {
    k(i, i) = kernel_value(family, hp, 0.0);
    for (int j = i + 1; j < m; ++j) {
      const double v =
          kernel_value(family, hp, scaled_sq_dist(hp, a.row(i).transpose(), a.row(j).transpose()));
      k(i, j) = k(j, i) = v;
    }
  }
  return k;
}

// Negative log marginal likelihood of centered targets for one kernel matrix.
inline std::optional<double> negative_lml(KernelFamily family, const GPHyperparameters& hp,
                                          const Mat& inputs, const Mat& centered) {
  Mat k = kernel_matrix(family, hp, inputs);
  k.diagonal().array() += hp.noise;
  const Eigen::LLT<Mat> llt(k);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Mat alpha = llt.solve(centered);
  const double quad = 0.5 * (centered.array() * alpha.array()).sum();
  const double logdet = Mat(llt.matrixL()).diagonal().array().log().sum();
  const double q = static_cast<double>(centered.cols());
  const double m = static_cast<double>(centered.rows());
  return quad + q * logdet + 0.5 * m * q * std::log(2.0 * std::numbers::pi);
}

// Deterministic Nelder-Mead with box clamping; small and predictable, which
// matters more here than convergence speed.
template <typename F>
Vec nelder_mead(const F& objective, Vec x0, const Vec& lo, const Vec& hi, int max_evaluations) {
  const int p = static_cast<int>(x0.size());
  auto clamp = [&](Vec x) {
    for (int i = 0; i < p; ++i) x[i] = std::min(hi[i], std::max(lo[i], x[i]));
    return x;
  };
  int evals = 0;
  auto value = [&](const Vec& x) {
    ++evals;
    return objective(clamp(x));
  };

  std::vector<Vec> simplex(p + 1);
  std::vector<double> f(p + 1);
  simplex[0] = clamp(std::move(x0));
  f[0] = value(simplex[0]);
  for (int i = 0; i < p; ++i) {
    simplex[i + 1] = simplex[0];
    simplex[i + 1][i] += 0.4;
    f[i + 1] = value(simplex[i + 1]);
  }

  while (evals < max_evaluations) {
    std::vector<int> idx(p + 1);
    for (int i = 0; i <= p; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return f[a] != f[b] ? f[a] < f[b] : a < b;
    });
    std::vector<Vec> s2(p + 1);
    std::vector<double> f2(p + 1);
    for (int i = 0; i <= p; ++i) {
      s2[i] = simplex[idx[i]];
      f2[i] = f[idx[i]];
    }
    simplex = std::move(s2);
    f = std::move(f2);
    if (std::abs(f[p] - f[0]) < 1e-9 * (1.0 + std::abs(f[0]))) break;

    Vec centroid = Vec::Zero(p);
    for (int i = 0; i < p; ++i) centroid += simplex[i];
    centroid /= static_cast<double>(p);

    const Vec reflected = centroid + (centroid - simplex[p]);
    const double fr = value(reflected);
    if (fr < f[0]) {
      const Vec expanded = centroid + 2.0 * (centroid - simplex[p]);
      const double fe = value(expanded);
      if (fe < fr) {
        simplex[p] = clamp(expanded);
        f[p] = fe;
      } else {
        simplex[p] = clamp(reflected);
        f[p] = fr;
      }
    } else if (fr < f[p - 1]) {
      simplex[p] = clamp(reflected);
      f[p] = fr;
    } else {
      const Vec contracted = centroid + 0.5 * (simplex[p] - centroid);
      const double fc = value(contracted);
      if (fc < f[p]) {
        simplex[p] = clamp(contracted);
        f[p] = fc;
      } else {
        for (int i = 1; i <= p; ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          f[i] = value(simplex[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= p; ++i)
    if (f[i] < f[best]) best = i;
  return clamp(simplex[best]);
}

}  // namespace detail

inline GPModel gp_fit(const Mat& inputs_in, const Mat& targets_in, const GPOptions& opts = {}) {
  require_finite(inputs_in, "GP inputs");
  require_finite(targets_in, "GP targets");
  if (inputs_in.rows() != targets_in.rows()) throw FitFailureError("input/target row mismatch");

  // Deduplicate inputs; repeated rows make K + ηI numerically singular.
  std::vector<int> keep;
  for (int i = 0; i < inputs_in.rows(); ++i) {
    bool dup = false;
    for (int j : keep)
      if ((inputs_in.row(i) - inputs_in.row(j)).cwiseAbs().maxCoeff() <= 1e-12) dup = true;
    if (!dup) keep.push_back(i);
  }
  const int m = static_cast<int>(keep.size());
  if (m < 10) throw FitFailureError("need at least 10 distinct input rows, have " +
                                    std::to_string(m));
  const int d = static_cast<int>(inputs_in.cols());
  const int q = static_cast<int>(targets_in.cols());

  GPModel model;
  model.kernel = opts.kernel;
  model.inputs.resize(m, d);
  model.targets.resize(m, q);
  for (int i = 0; i < m; ++i) {
    model.inputs.row(i) = inputs_in.row(keep[i]);
    model.targets.row(i) = targets_in.row(keep[i]);
  }
  model.target_mean = model.targets.colwise().mean();
  const Mat centered = model.targets.rowwise() - model.target_mean.transpose();

  const double target_var =
      std::max(centered.array().square().sum() / static_cast<double>(m * q), 1e-12);
  const double eta = opts.noise >= 0.0 ? std::max(opts.noise, 1e-10)
                                       : std::max(1e-8 * target_var, 1e-10);

  Vec input_scale(d);
  for (int j = 0; j < d; ++j) {
    const double mean = model.inputs.col(j).mean();
    const double var = (model.inputs.col(j).array() - mean).square().sum() / m;
    input_scale[j] = std::max(std::sqrt(var), 1e-9 * (1.0 + std::abs(mean)));
  }

  if (opts.fixed) {
    model.hyper = *opts.fixed;
    if (model.hyper.noise < 1e-10) model.hyper.noise = 1e-10;
  } else {
    // Hyperparameters from (possibly subsampled) data by maximizing the log
    // marginal likelihood over log-space box bounds.
    Mat hx = model.inputs;
    Mat hy = centered;
    if (opts.hyper_subset > 0 && m > opts.hyper_subset) {
      std::vector<int> order(m);
      for (int i = 0; i < m; ++i) order[i] = i;
      Rng rng(derive_seed(opts.seed, 0x677066));
      rng.shuffle(order);
      order.resize(opts.hyper_subset);
      std::sort(order.begin(), order.end());
      hx.resize(opts.hyper_subset, d);
      hy.resize(opts.hyper_subset, q);
      for (int i = 0; i < opts.hyper_subset; ++i) {
        hx.row(i) = model.inputs.row(order[i]);
        hy.row(i) = centered.row(order[i]);
      }
    }

    Vec lo(d + 1), hi(d + 1);
    for (int j = 0; j < d; ++j) {
      lo[j] = std::log(1e-3 * input_scale[j]);
      hi[j] = std::log(1e3 * input_scale[j]);
    }
    lo[d] = std::log(1e-6 * target_var);
    hi[d] = std::log(1e6 * target_var);

    auto objective = [&](const Vec& theta) {
      GPHyperparameters hp;
      hp.length_scales = theta.head(d).array().exp();
      hp.signal_variance = std::exp(theta[d]);
      hp.noise = eta;
      const auto nll = detail::negative_lml(opts.kernel, hp, hx, hy);
      return nll ? *nll : 1e30;
    };

    Rng rng(derive_seed(opts.seed, 0x677068));
    const double ell_factors[] = {1.0, 0.25, 4.0};
    const double var_factors[] = {1.0, 0.1, 10.0};
    double best = std::numeric_limits<double>::infinity();
    Vec best_theta;
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
      Vec theta(d + 1);
      for (int j = 0; j < d; ++j)
        theta[j] = std::log(input_scale[j] * ell_factors[r % 3]) +
                   (r >= 3 ?  0.5 * rng.normal() : 0.0);
      theta[d] = std::log(target_var * var_factors[r % 3]) + (r >= 3 ? 0.5 * rng.normal() : 0.0);
      const Vec found = detail::nelder_mead(objective, theta, lo, hi, opts.max_evaluations);
      const double value = objective(found);
      if (value < best) {
        best = value;
        best_theta = found;
      }
    }
    if (!best_theta.size() || best >= 1e30)
      throw FitFailureError("no restart produced a positive-definite kernel system");
    model.hyper.length_scales = best_theta.head(d).array().exp();
    model.hyper.signal_variance = std::exp(best_theta[d]);
    model.hyper.noise = eta;
  }

  // Final factorization on the full data, boosting the noise floor if the
  // chosen hyperparameters leave the system indefinite at scale m.
  for (int boost = 0;; ++boost) {
    Mat k = detail::kernel_matrix(opts.kernel, model.hyper, model.inputs);
    k.diagonal().array() += model.hyper.noise;
    const Eigen::LLT<Mat> llt(k);
    if (llt.info() == Eigen::Success) {
      model.chol_lower = llt.matrixL();
      model.weights = llt.solve(centered);
      const double logdet = model.chol_lower.diagonal().array().log().sum();
      model.log_marginal = -0.5 * (centered.array() * model.weights.array()).sum() -
                           q * logdet -
                           0.5 * m * q * std::log(2.0 * std::numbers::pi);
      break;
    }
    if (boost >= 8) throw FitFailureError("kernel matrix not positive definite");
    model.hyper.noise *= 10.0;
  }
  return model;
}

struct MeanDerivatives {
  Vec mean;                // q
  Mat jac;                 // q×d
  std::vector<Mat> hess;   // one d×d (symmetric) block per output
};

inline MeanDerivatives gp_mean_jac_hess(const GPModel& model, const Vec& u) {
  const int d = model.input_dim(), q = model.output_dim(), m = model.count();
  MeanDerivatives out;
  out.mean = model.target_mean;
  out.jac = Mat::Zero(q, d);
  out.hess.assign(q, Mat::Zero(d, d));

  const Vec inv_l2 = model.hyper.length_scales.array().square().inverse();
  Vec dk(d);
  Mat d2k(d, d);
  for (int i = 0; i < m; ++i) {
    const Vec delta = u - model.inputs.row(i).transpose();
    const Vec scaled = delta.cwiseProduct(inv_l2);
    const double r2 = delta.cwiseProduct(scaled).sum();
    if (model.kernel == KernelFamily::SquaredExponential) {
      const double k = model.hyper.signal_variance * std::exp(-0.5 * r2);
      dk = -k * scaled;
      for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
          const double v = k * (scaled[a] * scaled[b] - (a == b ? inv_l2[a] : 0.0));
          d2k(a, b) = v;
          d2k(b, a) = v;
        }
      const double kk = k;
      for (int c = 0; c < q; ++c) {
        const double w = model.weights(i, c);
        out.mean[c] += w * kk;
        out.jac.row(c) += w * dk.transpose();
        out.hess[c] += w * d2k;
      }
    } else {
      const double r = std::sqrt(r2);
      const double s2 = model.hyper.signal_variance;
      const double ex = std::exp(-std::sqrt(5.0) * r);
      const double k = s2 * (1.0 + std::sqrt(5.0) * r + 5.0 * r2 / 3.0) * ex;
      const double phi = -(5.0 / 3.0) * s2 * ex * (1.0 + std::sqrt(5.0) * r);
      const double psi = (25.0 / 3.0) * s2 * ex;  // φ'(r)/r
      dk = phi * scaled;
      for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
          const double v = psi * scaled[a] * scaled[b] + (a == b ? phi * inv_l2[a] : 0.0);
          d2k(a, b) = v;
          d2k(b, a) = v;
        }
      for (int c = 0; c < q; ++c) {
        const double w = model.weights(i, c);
        out.mean[c] += w * k;
        out.jac.row(c) += w * dk.transpose();
        out.hess[c] += w * d2k;
      }
    }
  }
  return out;
}

inline Vec gp_mean(const GPModel& model, const Vec& u) {
  Vec mean = model.target_mean;
  for (int i = 0; i < model.count(); ++i) {
    const double k = detail::kernel_value(
        model.kernel, model.hyper,
        detail::scaled_sq_dist(model.hyper, u, model.inputs.row(i).transpose()));
    mean += k * model.weights.row(i).transpose();
  }
  return mean;
}

// Posterior variance of the latent function (shared across outputs).
inline double gp_variance(const GPModel& model, const Vec& u) {
  const int m = model.count();
  Vec kstar(m);
  for (int i = 0; i < m; ++i)
    kstar[i] = detail::kernel_value(
        model.kernel, model.hyper,
        detail::scaled_sq_dist(model.hyper, u, model.inputs.row(i).transpose()));
  const Vec v = model.chol_lower.triangularView<Eigen::Lower>().solve(kstar);
  return std::max(0.0, detail::kernel_value(model.kernel, model.hyper, 0.0) - v.squaredNorm());
}

// Frobenius norm of the q×q predictive covariance (diagonal with equal
// entries, since outputs share the kernel): var·√q.
inline double covariance_norm(const GPModel& model, const Vec& u) {
  return gp_variance(model, u) * std::sqrt(static_cast<double>(model.output_dim()));
}

// Fit with the noise floor selected by evidence when the caller pinned none.
// Clouds relaxed onto a curved manifold keep a residue of off-manifold scatter
// in their targets; with a near-zero floor the likelihood explains that
// scatter by shrinking the length-scales below the sample spacing, and the
// resulting mean carries sample-scale wiggles whose second derivatives swamp
// the true curvature. Trying a short ladder of floors and keeping the highest
// marginal likelihood lets clean data stay near-interpolating while noisy
// data gets smoothed.
inline GPModel gp_fit_auto_noise(const Mat& inputs, const Mat& targets, const GPOptions& opts) {
  if (opts.noise >= 0.0 || opts.fixed) return gp_fit(inputs, targets, opts);
  const Vec mean = targets.colwise().mean();
  const double target_var = std::max(
      (targets.rowwise() - mean.transpose()).array().square().mean(), 1e-12);
  GPModel best;
  bool have = false;
  std::string last_error;
  for (const double rel : {1e-8, 1e-6, 1e-4, 1e-2}) {
    GPOptions rung = opts;
    rung.noise = std::max(rel * target_var, 1e-10);
    try {
      GPModel candidate = gp_fit(inputs, targets, rung);
      if (!have || candidate.log_marginal > best.log_marginal) {
        best = std::move(candidate);
        have = true;
      }
    } catch (const FitFailureError& e) {
      last_error = e.what();
    }
  }
  if (!have) throw FitFailureError("every noise floor failed to fit: " + last_error);
  return best;
}

struct ChartModel {
  manifold_learning::DiffusionEmbedding embedding;
  GPModel lift_gp;
  GPModel energy_gp;
  double boundary_threshold = 0.0;
  int chart_id = 0;
  double median_reconstruction_error = 0.0;
  double energy_rmse = 0.0;
};

inline int next_chart_id() {
  static std::atomic<int> counter{0};
  return counter++;
}

struct BuildChartOptions {
  manifold_learning::DiffusionMapOptions diffusion;
  GPOptions gp;
  int chart_id = -1;  // <0 → take the next global id
  double boundary_quantile = 0.95;
  double boundary_slack = 1.5;
};

inline bool boundary_check(const ChartModel& chart, const Vec& u) {
  return covariance_norm(chart.lift_gp, u) <= chart.boundary_threshold;
}

inline ChartModel build_chart(const sampling::PointCloud& cloud, const Vec& energy_values,
                              int d, const BuildChartOptions& opts = {}) {
  if (energy_values.size() != cloud.size())
    throw FitFailureError("energy value count does not match the cloud");
  require_finite(energy_values, "energy values");

  ChartModel chart;
  chart.chart_id = opts.chart_id >= 0 ? opts.chart_id : next_chart_id();
  chart.embedding = manifold_learning::fit(cloud, d, opts.diffusion);
  const Mat coords = chart.embedding.coords();
  chart.lift_gp = gp_fit_auto_noise(coords, cloud.points, opts.gp);
  chart.energy_gp = gp_fit_auto_noise(coords, energy_values, opts.gp);

  const int m = chart.lift_gp.count();
  std::vector<double> cov_norms(m);
  std::vector<double> recon(m);
  double energy_sq = 0.0;
  for (int i = 0; i < m; ++i) {
    const Vec u = chart.lift_gp.inputs.row(i).transpose();
    cov_norms[i] = covariance_norm(chart.lift_gp, u);
    recon[i] = (gp_mean(chart.lift_gp, u) - chart.lift_gp.targets.row(i).transpose()).norm();
  }
  for (int i = 0; i < chart.energy_gp.count(); ++i) {
    const Vec u = chart.energy_gp.inputs.row(i).transpose();
    energy_sq += sq(gp_mean(chart.energy_gp, u)[0] - chart.energy_gp.targets(i, 0));
  }
  chart.energy_rmse = std::sqrt(energy_sq / chart.energy_gp.count());

  std::vector<double> sorted = cov_norms;
  std::sort(sorted.begin(), sorted.end());
  const int qidx = std::min<int>(m - 1, static_cast<int>(std::ceil(opts.boundary_quantile * m)) - 1);
  chart.boundary_threshold = opts.boundary_slack * sorted[std::max(0, qidx)];

  std::sort(recon.begin(), recon.end());
  chart.median_reconstruction_error = recon[recon.size() / 2];
  return chart;
}

// ChartFunctions view over the fitted surrogates: ψ and Z with analytic
// derivatives, validity region from the covariance boundary test.
inline geometry::ChartFunctions chart_functions(const ChartModel& chart) {
  geometry::ChartFunctions fns;
  fns.chart_dim = chart.embedding.dim();
  fns.ambient_dim = chart.lift_gp.output_dim();
  // The closure keeps its own copy; chart bundles are small relative to the
  // work done per jet evaluation.
  auto model = std::make_shared<ChartModel>(chart);
  fns.jet = [model](const Vec& u) {
    geometry::ChartJet jet;
    jet.u = u;
    const MeanDerivatives lift = gp_mean_jac_hess(model->lift_gp, u);
    const MeanDerivatives energy = gp_mean_jac_hess(model->energy_gp, u);
    jet.lift = lift.mean;
    jet.dlift = lift.jac;
    jet.d2lift = lift.hess;
    jet.z = energy.mean[0];
    jet.dz = energy.jac.row(0).transpose();
    jet.d2z = energy.hess[0];
    return jet;
  };
  fns.inside = [model](const Vec& u) { return boundary_check(*model, u); };
  return fns;
}

}  // namespace gradex::surrogates
