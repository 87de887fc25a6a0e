// Outer loop: sample a neighborhood, learn a chart, trace the in-chart
// extremal segment, hand the direction to the next chart, stop at a fixed
// point. Charts are chained through the ambient space only.
#pragma once

#include <gradex/continuation.hpp>
#include <gradex/sampling.hpp>
#include <gradex/surrogates.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gradex::driver {

using geometry::ChartJet;

struct RunConfig {
  Vec p0;                      // ambient seed point, near the manifold
  int d = 2;                   // intrinsic dimension
  sampling::SamplerConfig sampler;
  continuation::ContinuationConfig continuation;
  surrogates::BuildChartOptions chart;
  double rho = 1e-4;           // global convergence threshold on |grad Z|_g
  int max_charts = 30;
  continuation::EigenBranch branch = continuation::EigenBranch::Smallest;
  double direction_sign = 1.0;
  bool random_direction = false;
  int transfer_points = 5;     // trailing states used for the chord direction
  bool scale_to_chart = true;  // derive step sizes from each chart's coordinate radius
  // Optional ambient vector orienting the first chart's eigen-direction: the
  // eigenvector sign is arbitrary, so demos align its lift with a meaningful
  // ambient heading before direction_sign is applied.
  Vec initial_ambient_direction;
  std::uint64_t seed = 0;
  // Optional override for the energy at sampled points (black-box systems);
  // when empty the ambient energy is evaluated directly.
  std::function<Vec(const Mat&)> energy_values;
};

struct ChartRunSummary {
  int chart_id = 0;
  int cloud_size = 0;
  double epsilon = 0.0;
  double boundary_threshold = 0.0;
  double median_reconstruction_error = 0.0;
  double energy_rmse = 0.0;
  continuation::GESegment segment;
  std::string exit_reason;
  Vec entry_ambient;
  Vec exit_ambient;
  Vec exit_velocity_ambient;   // unit vector, Dψ·v at the exit point
  double chaining_error = 0.0; // |ψ(φ(p_prev)) − p_prev| at chart entry
  double direction_angle_deg = 0.0;  // ambient angle between incoming and initial directions
  double arclength_ambient = 0.0;
  double initial_step = 0.0;
  bool stall_retry = false;
};

struct RunRecord {
  std::vector<ChartRunSummary> charts;
  Vec final_point;             // ambient p⋆
  double final_gradient_norm = std::numeric_limits<double>::infinity();
  double final_ambient_field_norm = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  int total_charts = 0;
  double cumulative_arclength = 0.0;
  std::string failure;         // nonempty when a chart could not be built

  int chart_count() const { return total_charts; }
};

struct FixedPointCheck {
  bool detected = false;
  double chart_gradient_norm = std::numeric_limits<double>::infinity();
  double ambient_field_norm = std::numeric_limits<double>::quiet_NaN();
};

inline FixedPointCheck detect_fixed_point(const geometry::ChartFunctions& chart, const Vec& q,
                                          double rho,
                                          const sampling::Dynamics* ambient_field = nullptr) {
  FixedPointCheck check;
  const ChartJet jet = chart.jet(q);
  const geometry::MetricData metric = geometry::metric_at(jet);
  check.chart_gradient_norm = geometry::gradient_norm(metric, jet.dz);
  check.detected = check.chart_gradient_norm < rho;
  if (ambient_field && ambient_field->velocity)
    check.ambient_field_norm = ambient_field->velocity(jet.lift).norm();
  return check;
}

namespace detail {

// Directional derivative of the out-of-sample embedding map along an ambient
// direction, by a forward difference at the kernel scale.
inline Vec embedding_pushforward(const manifold_learning::DiffusionEmbedding& emb, const Vec& p,
                                 const Vec& direction) {
  const double delta = 1e-4 * std::sqrt(emb.epsilon);
  const Vec base = manifold_learning::extend(emb, p);
  const Vec moved = manifold_learning::extend(emb, p + delta * direction.normalized());
  return (moved - base) / delta;
}

inline double rms_radius(const Mat& coords) {
  const Vec mean = coords.colwise().mean();
  double acc = 0.0;
  for (int i = 0; i < coords.rows(); ++i)
    acc += (coords.row(i).transpose() - mean).squaredNorm();
  return std::sqrt(acc / static_cast<double>(coords.rows()));
}

}  // namespace detail

// Direction hand-off between consecutive charts: the trailing ambient points
// of the previous segment are mapped into the new chart and the last chord,
// sign-aligned with the mapped exit velocity, becomes the new start direction.
inline Vec transfer_direction(const continuation::GESegment& prev_segment,
                              const geometry::ChartFunctions& prev_chart,
                              const surrogates::ChartModel& new_chart, int k = 5) {
  const int n = static_cast<int>(prev_segment.states.size());
  if (n < 2) throw DomainError("direction transfer needs at least two trailing states");
  const int take = std::min(std::max(2, k), n);

  std::vector<Vec> mapped(take);
  for (int i = 0; i < take; ++i)
    mapped[i] =
        manifold_learning::extend(new_chart.embedding, prev_segment.states[n - take + i].ambient);

  Vec v0 = mapped[take - 1] - mapped[take - 2];
  if (v0.norm() < 1e-15) v0 = mapped[take - 1] - mapped[0];
  if (v0.norm() < 1e-15)
    throw DomainError("trailing states collapse to one point in the new chart");
  v0.normalize();

  // Exit velocity in ambient coordinates, via the previous chart's lift.
  const ChartJet exit_jet = prev_chart.jet(prev_segment.exit_point);
  Vec w_ambient = exit_jet.dlift * prev_segment.exit_velocity;
  if (w_ambient.norm() > 1e-15) {
    w_ambient.normalize();
    const Vec pushed = detail::embedding_pushforward(new_chart.embedding,
                                                     prev_segment.states[n - 1].ambient, w_ambient);
    if (pushed.norm() > 1e-15 && v0.dot(pushed.normalized()) < 0.0) v0 = -v0;
  }
  return v0;
}

inline RunRecord run(const RunConfig& cfg, const potentials::Energy& energy,
                     const sampling::Dynamics& dynamics) {
  if (!(cfg.rho > 0.0)) throw ConfigError("convergence threshold must be positive");
  if (cfg.max_charts < 1) throw ConfigError("max charts must be at least 1");
  if (cfg.d < 1) throw ConfigError("intrinsic dimension must be at least 1");
  require_finite(cfg.p0, "seed point");

  RunRecord record;
  Vec p = cfg.p0;
  Vec w_ambient;  // incoming direction; empty on the first chart
  std::optional<continuation::GESegment> prev_segment;
  std::shared_ptr<surrogates::ChartModel> prev_model;
  geometry::ChartFunctions prev_fns;

  for (int n = 0; n < cfg.max_charts; ++n) {
    ChartRunSummary summary;
    summary.entry_ambient = p;

    surrogates::ChartModel model;
    geometry::ChartFunctions fns;
    Vec q0;
    try {
      sampling::SamplerConfig sampler = cfg.sampler;
      sampler.seed = derive_seed(cfg.seed, 0x636c6400 + static_cast<std::uint64_t>(n));
      const sampling::PointCloud cloud = sampling::sample_neighborhood(p, sampler, dynamics);

      Vec energies;
      if (cfg.energy_values) {
        energies = cfg.energy_values(cloud.points);
        if (energies.size() != cloud.size())
          throw FitFailureError("energy hook returned wrong number of values");
      } else {
        energies.resize(cloud.size());
        for (int i = 0; i < cloud.size(); ++i)
          energies[i] = energy.eval(cloud.points.row(i).transpose());
      }

      surrogates::BuildChartOptions chart_opts = cfg.chart;
      chart_opts.diffusion.seed = derive_seed(cfg.seed, 0x646d00 + static_cast<std::uint64_t>(n));
      chart_opts.gp.seed = derive_seed(cfg.seed, 0x677000 + static_cast<std::uint64_t>(n));
      if (chart_opts.chart_id < 0) chart_opts.chart_id = n;  // per-run numbering
      model = surrogates::build_chart(cloud, energies, cfg.d, chart_opts);
      fns = surrogates::chart_functions(model);

      q0 = manifold_learning::extend(model.embedding, p);
      summary.chart_id = model.chart_id;
      summary.cloud_size = cloud.size();
      summary.epsilon = model.embedding.epsilon;
      summary.boundary_threshold = model.boundary_threshold;
      summary.median_reconstruction_error = model.median_reconstruction_error;
      summary.energy_rmse = model.energy_rmse;
      summary.chaining_error = (surrogates::gp_mean(model.lift_gp, q0) - p).norm();
    } catch (const Error& e) {
      record.failure = std::string("chart ") + std::to_string(n + 1) + ": " + e.what();
      record.final_point = p;
      record.total_charts = static_cast<int>(record.charts.size());
      return record;
    }

    // Continuation settings proportioned to this chart's coordinate scale.
    continuation::ContinuationConfig cc = cfg.continuation;
    cc.critical_grad_tol = cfg.rho;
    if (cfg.scale_to_chart) {
      const double radius = detail::rms_radius(model.lift_gp.inputs);
      cc.initial_step = 0.05 * radius;
      cc.min_step = 1e-8 * radius;
      cc.max_step = 0.25 * radius;
      const ChartJet jet0 = fns.jet(q0);
      const geometry::MetricData metric0 = geometry::metric_at(jet0, cc.condition_limit);
      const Mat lower = geometry::covariant_hessian_lower(metric0, jet0.dz, jet0.d2z);
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat> pencil(lower, metric0.g);
      if (pencil.info() == Eigen::Success)
        cc.lambda_scale = 1.0 + pencil.eigenvalues().cwiseAbs().maxCoeff();
      const double energy_spread = model.energy_gp.targets.maxCoeff() -
                                   model.energy_gp.targets.minCoeff();
      cc.level_scale = 1.0 + energy_spread;
    }
    summary.initial_step = cc.initial_step;

    // Start direction: eigen-branch (or random) on the first chart, chord
    // transfer afterwards.
    Vec v0;
    try {
      if (!prev_segment) {
        if (cfg.random_direction) {
          Rng rng(derive_seed(cfg.seed, 0x646972));
          v0 = rng.normal_vector(cfg.d).normalized();
        } else {
          v0 = continuation::initial_direction(fns, q0, cfg.branch, cc.condition_limit);
          if (cfg.initial_ambient_direction.size() > 0) {
            const ChartJet jet0 = fns.jet(q0);
            if ((jet0.dlift * v0).dot(cfg.initial_ambient_direction) < 0.0) v0 = -v0;
          }
          v0 *= cfg.direction_sign;
        }
      } else {
        v0 = transfer_direction(*prev_segment, prev_fns, model, cfg.transfer_points);
        const ChartJet jet0 = fns.jet(q0);
        Vec lifted = jet0.dlift * v0;
        if (lifted.norm() > 1e-15 && w_ambient.size() > 0) {
          lifted.normalize();
          const double c = std::clamp(lifted.dot(w_ambient), -1.0, 1.0);
          summary.direction_angle_deg = std::acos(c) * 180.0 / std::numbers::pi;
        }
      }
    } catch (const Error& e) {
      record.failure = std::string("direction transfer into chart ") + std::to_string(n + 1) +
                       ": " + e.what();
      record.final_point = p;
      record.total_charts = static_cast<int>(record.charts.size());
      return record;
    }

    continuation::GESegment segment;
    Vec w;
    try {
      segment = continuation::resolve_extremal_curve(fns, q0, v0, cc);
      if (segment.termination == continuation::Termination::Stalled) {
        continuation::ContinuationConfig retry = cc;
        retry.initial_step = cc.initial_step / 10.0;
        retry.start_exclusion = cc.start_exclusion;  // recomputed from the smaller step if unset
        segment = continuation::resolve_extremal_curve(fns, q0, v0, retry);
        summary.stall_retry = true;
      }

      summary.segment = segment;
      summary.exit_reason = continuation::to_string(segment.termination);
      summary.exit_ambient = segment.states.back().ambient;
      for (std::size_t i = 1; i < segment.states.size(); ++i)
        summary.arclength_ambient +=
            (segment.states[i].ambient - segment.states[i - 1].ambient).norm();

      const ChartJet exit_jet = fns.jet(segment.exit_point);
      w = exit_jet.dlift * segment.exit_velocity;
      if (w.norm() > 1e-15) w.normalize();
      summary.exit_velocity_ambient = w;
    } catch (const Error& e) {
      record.failure =
          std::string("chart ") + std::to_string(n + 1) + ": " + e.what();
      record.final_point = p;
      record.total_charts = static_cast<int>(record.charts.size());
      return record;
    }
    record.cumulative_arclength += summary.arclength_ambient;
    const continuation::GEState& last = segment.states.back();

    record.charts.push_back(summary);
    record.total_charts = static_cast<int>(record.charts.size());
    record.final_point = last.ambient;
    record.final_gradient_norm = last.gradient_norm;
    if (dynamics.velocity)
      record.final_ambient_field_norm = dynamics.velocity(last.ambient).norm();

    // Algorithm requires progress through more than one chart before the
    // fixed-point criterion may fire.
    if (record.total_charts > 1 && last.gradient_norm < cfg.rho) {
      record.converged = true;
      return record;
    }
    if (segment.termination == continuation::Termination::Stalled) return record;

    p = last.ambient;
    w_ambient = w;
    prev_segment = std::move(segment);
    prev_model = std::make_shared<surrogates::ChartModel>(std::move(model));
    prev_fns = fns;
  }
  return record;
}

}  // namespace gradex::driver
