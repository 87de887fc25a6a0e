#include <gradex/charts.hpp>
#include <gradex/driver.hpp>
#include <gradex/io.hpp>
#include <gradex/potentials.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace gradex;
using Catch::Approx;

namespace {

// Quadratic energy in the ambient space; restricted to the unit sphere its
// critical points are the coordinate axes (min ±x, saddle ±y, max ±z).
potentials::Energy axis_energy() {
  Mat q(3, 3);
  q.setZero();
  q(0, 0) = 1.0;
  q(1, 1) = 2.0;
  q(2, 2) = 3.0;
  return potentials::quadratic_energy(q);
}

driver::RunConfig base_config() {
  driver::RunConfig rc;
  rc.p0 = Vec(3);
  rc.p0 << 1.0, 0.0, 0.0;
  rc.d = 2;
  rc.sampler.count = 400;
  rc.sampler.sigma = 0.1;
  rc.sampler.seed = 0;
  rc.chart.gp.hyper_subset = 150;
  rc.rho = 1e-3;
  rc.max_charts = 20;
  rc.seed = 2024;
  Vec toward(3);
  toward << 0.0, 1.0, 0.0;
  rc.initial_ambient_direction = toward;
  return rc;
}

}  // namespace

TEST_CASE("learned charts carry the trace from minimum to saddle", "[driver][slow]") {
  const potentials::Energy energy = axis_energy();
  const auto dynamics = sampling::fast_slow_sphere_dynamics(energy);
  const driver::RunConfig rc = base_config();
  const driver::RunRecord record = driver::run(rc, energy, dynamics);

  INFO("failure: " << record.failure);
  REQUIRE(record.failure.empty());
  REQUIRE(record.converged);
  REQUIRE(record.chart_count() >= 2);
  REQUIRE(record.total_charts == static_cast<int>(record.charts.size()));
  REQUIRE(record.final_gradient_norm < rc.rho);

  Vec saddle(3);
  saddle << 0.0, 1.0, 0.0;
  const double dist = std::min((record.final_point - saddle).norm(),
                               (record.final_point + saddle).norm());
  REQUIRE(dist < 0.05);

  REQUIRE(record.cumulative_arclength > 0.5);
  for (std::size_t i = 0; i < record.charts.size(); ++i) {
    const auto& c = record.charts[i];
    REQUIRE(c.cloud_size == rc.sampler.count);
    REQUIRE(c.epsilon > 0.0);
    REQUIRE(c.boundary_threshold > 0.0);
    REQUIRE(std::isfinite(c.median_reconstruction_error));
    REQUIRE(!c.exit_reason.empty());
    REQUIRE(std::abs(c.entry_ambient.norm() - 1.0) < 0.1);
    REQUIRE(std::abs(c.exit_ambient.norm() - 1.0) < 0.1);
    REQUIRE(c.segment.states.size() >= 2);
    if (i > 0) {
      REQUIRE(std::isfinite(c.chaining_error));
      REQUIRE(c.chaining_error < 0.2);
      // the transferred direction and the previous exit velocity must at
      // least point the same way once lifted back to the ambient space
      REQUIRE(std::abs(c.direction_angle_deg) < 90.0);
    }
  }
}

TEST_CASE("an infinite threshold converges right after the second chart", "[driver][slow]") {
  const potentials::Energy energy = axis_energy();
  const auto dynamics = sampling::fast_slow_sphere_dynamics(energy);
  driver::RunConfig rc = base_config();
  rc.rho = 1e9;
  const driver::RunRecord record = driver::run(rc, energy, dynamics);
  REQUIRE(record.converged);
  REQUIRE(record.total_charts == 2);
}

TEST_CASE("a single-chart budget can never converge", "[driver][slow]") {
  const potentials::Energy energy = axis_energy();
  const auto dynamics = sampling::fast_slow_sphere_dynamics(energy);
  driver::RunConfig rc = base_config();
  rc.rho = 1e9;
  rc.max_charts = 1;
  const driver::RunRecord record = driver::run(rc, energy, dynamics);
  REQUIRE_FALSE(record.converged);
  REQUIRE(record.total_charts == 1);
}

TEST_CASE("chart construction failures abort with a partial record", "[driver][slow]") {
  const potentials::Energy energy = axis_energy();
  const auto dynamics = sampling::fast_slow_sphere_dynamics(energy);
  driver::RunConfig rc = base_config();
  rc.rho = 1e-12;  // keep going past the first chart
  auto calls = std::make_shared<int>(0);
  rc.energy_values = [energy, calls](const Mat& points) {
    if (++*calls >= 2) throw FitFailureError("synthetic failure for testing");
    Vec values(points.rows());
    for (int i = 0; i < points.rows(); ++i) values[i] = energy.eval(points.row(i).transpose());
    return values;
  };
  const driver::RunRecord record = driver::run(rc, energy, dynamics);
  REQUIRE_FALSE(record.converged);
  REQUIRE(record.chart_count() == 1);
  REQUIRE(record.failure.find("chart 2") != std::string::npos);
  REQUIRE(record.failure.find("synthetic failure") != std::string::npos);
}

TEST_CASE("run configuration is validated", "[driver]") {
  const potentials::Energy energy = axis_energy();
  const auto dynamics = sampling::fast_slow_sphere_dynamics(energy);
  driver::RunConfig rc = base_config();
  rc.rho = 0.0;
  REQUIRE_THROWS_AS(driver::run(rc, energy, dynamics), ConfigError);
  rc = base_config();
  rc.max_charts = 0;
  REQUIRE_THROWS_AS(driver::run(rc, energy, dynamics), ConfigError);
  rc = base_config();
  rc.p0[0] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(driver::run(rc, energy, dynamics), Error);
}

TEST_CASE("fixed points are flagged by the chart gradient", "[driver]") {
  Mat q(2, 2);
  q << 2.0, 0.0, 0.0, 3.0;
  const auto chart = geometry::identity_chart(potentials::quadratic_energy(q));
  const auto at_min = driver::detect_fixed_point(chart, Vec::Zero(2), 1e-6);
  REQUIRE(at_min.detected);
  REQUIRE(at_min.chart_gradient_norm < 1e-12);
  REQUIRE(std::isnan(at_min.ambient_field_norm));

  // a vanishing threshold can never fire
  const auto never = driver::detect_fixed_point(chart, Vec::Zero(2), 0.0);
  REQUIRE_FALSE(never.detected);

  Vec away(2);
  away << 0.5, 0.5;
  REQUIRE_FALSE(driver::detect_fixed_point(chart, away, 1e-6).detected);

  // the ambient field norm is reported alongside when a field is attached
  sampling::Dynamics field;
  field.dim = 2;
  field.velocity = [](const Vec& x) { return Vec(2.0 * x); };
  const auto with_field = driver::detect_fixed_point(chart, Vec::Zero(2), 1e-6, &field);
  REQUIRE(with_field.detected);
  REQUIRE(with_field.ambient_field_norm == 0.0);
}

TEST_CASE("runs are reproducible by seed", "[driver][slow]") {
  const potentials::Energy energy = axis_energy();
  const auto dynamics = sampling::fast_slow_sphere_dynamics(energy);
  driver::RunConfig rc = base_config();
  rc.rho = 1e9;  // two charts are enough for a byte comparison
  const auto a = driver::run(rc, energy, dynamics);
  const auto b = driver::run(rc, energy, dynamics);
  REQUIRE(io::run_record_json(a).dump() == io::run_record_json(b).dump());
  REQUIRE((a.final_point - b.final_point).norm() == 0.0);
}
