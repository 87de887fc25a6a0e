#include <gradex/potentials.hpp>
#include <gradex/sampling.hpp>
#include <gradex/surrogates.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace gradex;
using Catch::Approx;

namespace {

// Smooth 2-D test function with nonconstant curvature.
double bump(const Vec& u) { return std::sin(u[0]) * std::cos(1.3 * u[1]) + 0.2 * u[0] * u[1]; }

std::pair<Mat, Vec> training_set(int m, std::uint64_t seed) {
  Rng rng(seed);
  Mat x(m, 2);
  Vec y(m);
  for (int i = 0; i < m; ++i) {
    x.row(i) = rng.normal_vector(2).transpose();
    y[i] = bump(x.row(i).transpose());
  }
  return {x, y};
}

}  // namespace

TEST_CASE("process regression interpolates and differentiates", "[surrogates]") {
  const auto [x, y] = training_set(120, 3);
  for (auto kernel :
       {surrogates::KernelFamily::SquaredExponential, surrogates::KernelFamily::Matern52}) {
    surrogates::GPOptions opts;
    opts.kernel = kernel;
    opts.seed = 11;
    const auto gp = surrogates::gp_fit(x, y, opts);
    REQUIRE(std::isfinite(gp.log_marginal));

    double worst = 0.0;
    for (int i = 0; i < x.rows(); ++i)
      worst = std::max(worst,
                       std::abs(surrogates::gp_mean(gp, x.row(i).transpose())[0] - y[i]));
    REQUIRE(worst < 1e-4);

    Rng rng(17);
    double worst_jac = 0.0, worst_hess = 0.0;
    for (int t = 0; t < 25; ++t) {
      const Vec u = 0.8 * rng.normal_vector(2);
      const auto d = surrogates::gp_mean_jac_hess(gp, u);
      const Vec jfd = oracles::fd_gradient(
          [&](const Vec& q) { return surrogates::gp_mean(gp, q)[0]; }, u, 1e-5);
      worst_jac = std::max(worst_jac,
                           (d.jac.row(0).transpose() - jfd).norm() / (1.0 + jfd.norm()));
      const Mat hfd = oracles::fd_jacobian(
          [&](const Vec& q) {
            return Vec(surrogates::gp_mean_jac_hess(gp, q).jac.row(0).transpose());
          },
          u, 1e-5);
      worst_hess =
          std::max(worst_hess, (d.hess[0] - hfd).norm() / (1.0 + hfd.norm()));
    }
    REQUIRE(worst_jac < 1e-5);
    REQUIRE(worst_hess < 1e-3);
  }
}

TEST_CASE("constant targets give an exactly flat surrogate", "[surrogates]") {
  const auto [x, y_unused] = training_set(60, 5);
  (void)y_unused;
  const Vec y = Vec::Constant(60, 2.75);
  surrogates::GPOptions opts;
  opts.seed = 7;
  const auto gp = surrogates::gp_fit(x, y, opts);
  const auto d = surrogates::gp_mean_jac_hess(gp, Vec::Zero(2));
  REQUIRE(d.mean[0] == Approx(2.75).margin(1e-12));
  REQUIRE(d.jac.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(d.hess[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vector targets are fitted jointly", "[surrogates]") {
  Rng rng(13);
  const int m = 80;
  Mat x(m, 2), y(m, 3);
  for (int i = 0; i < m; ++i) {
    x.row(i) = rng.normal_vector(2).transpose();
    const Vec u = x.row(i).transpose();
    y.row(i) << std::sin(u[0]), std::cos(u[1]), u[0] * u[1];
  }
  surrogates::GPOptions opts;
  opts.seed = 23;
  const auto gp = surrogates::gp_fit(x, y, opts);
  REQUIRE(gp.output_dim() == 3);
  const Vec u = 0.3 * Vec::Ones(2);
  const auto d = surrogates::gp_mean_jac_hess(gp, u);
  REQUIRE(d.jac.rows() == 3);
  REQUIRE(d.hess.size() == 3);
  REQUIRE(d.mean[0] == Approx(std::sin(0.3)).margin(2e-3));
  REQUIRE(d.mean[2] == Approx(0.09).margin(2e-3));
}

TEST_CASE("tiny training sets are rejected", "[surrogates]") {
  Mat x(5, 2);
  x.setRandom();
  Vec y(5);
  y.setZero();
  REQUIRE_THROWS_AS(surrogates::gp_fit(x, y, {}), FitFailureError);
}

TEST_CASE("duplicate rows are removed before conditioning", "[surrogates]") {
  auto [x, y] = training_set(40, 29);
  Mat xd(80, 2);
  Vec yd(80);
  xd << x, x;
  yd << y, y;
  const auto gp = surrogates::gp_fit(xd, yd, {});
  REQUIRE(gp.count() == 40);
  REQUIRE(std::abs(surrogates::gp_mean(gp, x.row(0).transpose())[0] - y[0]) < 1e-4);
}

TEST_CASE("fits are reproducible by seed", "[surrogates]") {
  const auto [x, y] = training_set(90, 31);
  surrogates::GPOptions opts;
  opts.seed = 77;
  const auto a = surrogates::gp_fit(x, y, opts);
  const auto b = surrogates::gp_fit(x, y, opts);
  REQUIRE((a.weights - b.weights).norm() == 0.0);
  REQUIRE((a.hyper.length_scales - b.hyper.length_scales).norm() == 0.0);
  REQUIRE(a.hyper.signal_variance == b.hyper.signal_variance);
}

TEST_CASE("fixed hyperparameters bypass the search", "[surrogates]") {
  const auto [x, y] = training_set(60, 37);
  surrogates::GPOptions opts;
  surrogates::GPHyperparameters fixed;
  fixed.length_scales = Vec::Constant(2, 0.9);
  fixed.signal_variance = 1.7;
  fixed.noise = 1e-8;
  opts.fixed = fixed;
  const auto gp = surrogates::gp_fit(x, y, opts);
  REQUIRE((gp.hyper.length_scales - fixed.length_scales).norm() == 0.0);
  REQUIRE(gp.hyper.signal_variance == 1.7);
}

TEST_CASE("predictive variance grows away from the data", "[surrogates]") {
  const auto [x, y] = training_set(80, 41);
  surrogates::GPOptions opts;
  opts.seed = 3;
  const auto gp = surrogates::gp_fit(x, y, opts);
  const double near = surrogates::gp_variance(gp, x.row(0).transpose());
  const double far = surrogates::gp_variance(gp, Vec::Constant(2, 25.0));
  REQUIRE(near >= 0.0);
  REQUIRE(far > near);
  REQUIRE(far == Approx(gp.hyper.signal_variance).epsilon(0.05));
  REQUIRE(surrogates::covariance_norm(gp, Vec::Constant(2, 25.0)) ==
          Approx(far * std::sqrt(static_cast<double>(gp.output_dim()))).epsilon(1e-12));
}

TEST_CASE("chart models learn a sphere patch", "[surrogates][slow]") {
  const potentials::Energy energy = potentials::sphere_xyz();
  const auto dyn = sampling::fast_slow_sphere_dynamics(energy);
  sampling::SamplerConfig scfg;
  scfg.count = 400;
  scfg.seed = 5;
  Vec p0(3);
  p0 << 1.0, 0.0, 0.0;
  const auto cloud = sampling::sample_neighborhood(p0, scfg, dyn);
  Vec energies(cloud.size());
  for (int i = 0; i < cloud.size(); ++i)
    energies[i] = energy.eval(cloud.points.row(i).transpose());

  surrogates::BuildChartOptions opts;
  opts.chart_id = 42;
  opts.gp.seed = 9;
  const auto chart = surrogates::build_chart(cloud, energies, 2, opts);
  REQUIRE(chart.chart_id == 42);
  REQUIRE(chart.embedding.dim() == 2);
  REQUIRE(chart.boundary_threshold > 0.0);
  REQUIRE(chart.median_reconstruction_error < 0.05);
  REQUIRE(chart.energy_rmse < 0.05);

  const auto fns = surrogates::chart_functions(chart);
  REQUIRE(fns.chart_dim == 2);
  REQUIRE(fns.ambient_dim == 3);

  // lifted points stay near the sphere inside the chart
  const Mat coords = chart.embedding.coords();
  const Vec q0 = coords.colwise().mean();
  REQUIRE(surrogates::boundary_check(chart, q0));
  const auto jet = fns.jet(q0);
  REQUIRE(std::abs(jet.lift.norm() - 1.0) < 0.05);

  // jet derivatives agree with differenced surrogate means
  const Mat jfd = oracles::fd_jacobian(
      [&](const Vec& q) { return surrogates::gp_mean(chart.lift_gp, q); }, q0, 1e-5);
  REQUIRE((jet.dlift - jfd).norm() < 1e-4 * (1.0 + jfd.norm()));
  const Vec gfd = oracles::fd_gradient(
      [&](const Vec& q) { return surrogates::gp_mean(chart.energy_gp, q)[0]; }, q0, 1e-5);
  REQUIRE((jet.dz - gfd).norm() < 1e-4 * (1.0 + gfd.norm()));

  // far-away query points fall outside the trusted region
  REQUIRE_FALSE(surrogates::boundary_check(chart, q0 + Vec::Constant(2, 50.0)));
  REQUIRE(fns.inside(q0));
}

TEST_CASE("simplex search minimizes a smooth bowl inside bounds", "[surrogates]") {
  const Vec lo = Vec::Constant(2, -5.0), hi = Vec::Constant(2, 5.0);
  const Vec x0 = Vec::Zero(2);
  const auto f = [](const Vec& p) {
    return (p[0] - 1.2) * (p[0] - 1.2) + 2.0 * (p[1] + 0.4) * (p[1] + 0.4);
  };
  const Vec xmin = surrogates::detail::nelder_mead(f, x0, lo, hi, 400);
  REQUIRE(std::abs(xmin[0] - 1.2) < 1e-3);
  REQUIRE(std::abs(xmin[1] + 0.4) < 1e-3);
  // bounds are hard: a minimum outside the box lands on the boundary
  const auto g = [](const Vec& p) { return (p[0] - 9.0) * (p[0] - 9.0) + p[1] * p[1]; };
  const Vec clamped = surrogates::detail::nelder_mead(g, x0, lo, hi, 400);
  REQUIRE(clamped[0] == Approx(5.0).margin(1e-6));
}
