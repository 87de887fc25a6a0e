#include <gradex/potentials.hpp>
#include <gradex/critical_points.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace gradex;
using Catch::Approx;

TEST_CASE("four-well surface matches the closed form", "[potentials]") {
  const potentials::Energy e = potentials::mueller_brown();
  REQUIRE(e.dim == 2);
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    Vec x(2);
    x << rng.uniform(-1.5, 1.2), rng.uniform(-0.5, 2.0);
    const double ref = oracles::mb_value(x[0], x[1]);
    REQUIRE(e.eval(x) == Approx(ref).epsilon(1e-12).margin(1e-12));
    const Eigen::Vector2d gref = oracles::mb_gradient(x[0], x[1]);
    REQUIRE((e.gradient(x) - gref).norm() <= 1e-9 * (1.0 + gref.norm()));
    const Eigen::Matrix2d href = oracles::mb_hessian(x[0], x[1]);
    REQUIRE((e.hessian(x) - href).norm() <= 1e-8 * (1.0 + href.norm()));
  }
}

TEST_CASE("analytic derivatives agree with finite differences", "[potentials]") {
  const std::vector<potentials::Energy> energies = {
      potentials::mueller_brown(), potentials::meander_potential(), potentials::sphere_xyz()};
  Rng rng(23);
  for (const auto& e : energies) {
    for (int i = 0; i < 20; ++i) {
      const Vec x = rng.normal_vector(e.dim);
      const Vec g = e.gradient(x);
      const Vec gfd = oracles::fd_gradient([&](const Vec& p) { return e.eval(p); }, x);
      REQUIRE((g - gfd).norm() <= 2e-4 * (1.0 + gfd.norm()));
      const Mat h = e.hessian(x);
      const Mat hfd = oracles::fd_jacobian([&](const Vec& p) { return e.gradient(p); }, x);
      REQUIRE((h - hfd).norm() <= 2e-4 * (1.0 + hfd.norm()));
      REQUIRE((h - h.transpose()).norm() <= 1e-12 * (1.0 + h.norm()));
    }
  }
}

TEST_CASE("critical point search recovers the known five", "[potentials]") {
  const potentials::Energy e = potentials::mueller_brown();
  Vec lo(2), hi(2);
  lo << -1.5, -0.5;
  hi << 1.2, 2.0;
  const auto crits = potentials::find_energy_critical_points(e, lo, hi);

  const std::vector<oracles::Critical> refs = {
      oracles::mb_rightmost_minimum(), oracles::mb_middle_minimum(), oracles::mb_left_minimum(),
      oracles::mb_low_saddle(), oracles::mb_high_saddle()};
  int minima = 0, saddles = 0;
  for (const auto& c : crits) {
    REQUIRE(c.residual < 1e-8);
    minima += c.kind == potentials::CriticalKind::Minimum;
    saddles += c.kind == potentials::CriticalKind::Saddle;
  }
  REQUIRE(minima == 3);
  REQUIRE(saddles == 2);
  for (const auto& ref : refs) {
    double best = 1e9;
    for (const auto& c : crits) best = std::min(best, (c.x - Vec(ref.x)).norm());
    REQUIRE(best < 1e-8);
  }
  const auto rm = potentials::rightmost_minimum(crits);
  REQUIRE((rm.x - Vec(oracles::mb_rightmost_minimum().x)).norm() < 1e-8);
  REQUIRE(rm.value == Approx(oracles::mb_rightmost_minimum().value).epsilon(1e-10));
}

TEST_CASE("wide meandering surface has two separated minima", "[potentials]") {
  const potentials::Energy e = potentials::meander_potential();
  // Search wide enough to capture the far well: the surface has minima near
  // (10.52, 2.09) and (71.20, 123.56) plus a connecting saddle near (53.99, 70.19),
  // located independently by Newton iteration on a finite-difference gradient.
  Vec lo(2), hi(2);
  lo << -20.0, -20.0;
  hi << 90.0, 140.0;
  const auto crits = potentials::find_energy_critical_points(e, lo, hi, 28);
  auto eval = [&](const Vec& x) { return e.eval(x); };
  for (const auto& c : crits) REQUIRE(oracles::fd_gradient(eval, c.x).norm() < 1e-5);

  std::vector<Vec> minima;
  bool saw_saddle = false;
  for (const auto& c : crits) {
    if (c.kind == potentials::CriticalKind::Minimum) minima.push_back(c.x);
    if (c.kind == potentials::CriticalKind::Saddle &&
        (c.x - Vec(Eigen::Vector2d(53.989, 70.190))).norm() < 0.1)
      saw_saddle = true;
  }
  REQUIRE(minima.size() >= 2);
  REQUIRE(saw_saddle);

  const auto low = potentials::lowest_minimum(crits);
  REQUIRE((low.x - Vec(Eigen::Vector2d(10.524, 2.094))).norm() < 0.01);
  double spread = 0.0;
  for (const auto& m : minima) spread = std::max(spread, (m - low.x).norm());
  REQUIRE(spread > 10.0);
}

TEST_CASE("quadratic energy exposes its matrix exactly", "[potentials]") {
  Mat q(2, 2);
  q << 3.0, 1.0, 1.0, 2.0;
  const potentials::Energy e = potentials::quadratic_energy(q);
  Vec x(2);
  x << 0.7, -1.3;
  REQUIRE(e.eval(x) == Approx(0.5 * x.dot(q * x)).epsilon(1e-14));
  REQUIRE((e.gradient(x) - q * x).norm() < 1e-14);
  REQUIRE((e.hessian(x) - q).norm() < 1e-14);
}

TEST_CASE("coordinate-product energy and its sphere extrema", "[potentials]") {
  const potentials::Energy e = potentials::sphere_xyz();
  Vec p(3);
  p << 0.3, -0.5, 0.8;
  REQUIRE(e.eval(p) == Approx(0.3 * -0.5 * 0.8).epsilon(1e-14));
  for (const auto& q : oracles::sphere_xyz_extrema())
    REQUIRE(oracles::sphere_xyz_lagrange_residual(q) < 1e-14);
  // the eight symmetric extrema carry energy ±3^{-3/2}, the axis points zero
  const double ext = std::pow(3.0, -1.5);
  int at_ext = 0, at_zero = 0;
  for (const auto& q : oracles::sphere_xyz_extrema()) {
    const double v = e.eval(q);
    if (std::abs(std::abs(v) - ext) < 1e-14) ++at_ext;
    if (std::abs(v) < 1e-14) ++at_zero;
  }
  REQUIRE(at_ext == 8);
  REQUIRE(at_zero == 6);
}

TEST_CASE("reactor field has three steady states with sane stability",
          "[potentials]") {
  const potentials::VectorField f = potentials::cstr_field();
  Vec lo(2), hi(2);
  lo << 0.0, 0.0;
  hi << 1.5, 8.0;
  auto ss = potentials::find_steady_states(f, lo, hi, 24);
  REQUIRE(ss.size() == 3);
  std::sort(ss.begin(), ss.end(), [](const auto& a, const auto& b) { return a.x[1] < b.x[1]; });
  for (const auto& s : ss) {
    REQUIRE(f.eval(s.x).norm() < 1e-9);
    const Mat jfd = oracles::fd_jacobian([&](const Vec& x) { return f.eval(x); }, s.x);
    REQUIRE((f.jacobian(s.x) - jfd).norm() < 1e-5 * (1.0 + jfd.norm()));
    const Eigen::EigenSolver<Mat> es(f.jacobian(s.x));
    const bool stable = es.eigenvalues().real().maxCoeff() < 0.0;
    REQUIRE(s.stable == stable);
  }
  REQUIRE(ss.front().stable);
  REQUIRE_FALSE(ss[1].stable);
}

TEST_CASE("squared field magnitude vanishes exactly at steady states", "[potentials]") {
  const potentials::VectorField f = potentials::cstr_field();
  const potentials::Energy e = potentials::squared_magnitude(f);
  Vec x(2);
  x << 0.4, 2.0;
  REQUIRE(e.eval(x) == Approx(f.eval(x).squaredNorm()).epsilon(1e-14));
  const Vec gfd = oracles::fd_gradient([&](const Vec& p) { return e.eval(p); }, x);
  REQUIRE((e.gradient(x) - gfd).norm() < 1e-4 * (1.0 + gfd.norm()));
  const Mat hfd = oracles::fd_jacobian([&](const Vec& p) { return e.gradient(p); }, x);
  REQUIRE((e.hessian(x) - hfd).norm() < 1e-3 * (1.0 + hfd.norm()));
}

TEST_CASE("oscillator field and its hyperbolic length", "[potentials]") {
  const double mu = 2.0;
  const potentials::VectorField f = potentials::van_der_pol_field(mu);
  REQUIRE(f.eval(Vec::Zero(2)).norm() == 0.0);
  Vec y(2);
  y << 0.3, -0.2;
  Vec expect(2);
  expect << y[1], mu * (1.0 - y[0] * y[0]) * y[1] - y[0];
  REQUIRE((f.eval(y) - expect).norm() < 1e-14);

  REQUIRE(potentials::hyperbolic_squared_length(Eigen::Vector2d::Zero(), mu,
                                                potentials::PoincareForm::AsPrinted) == 0.0);
  const Eigen::Vector2d y2(0.4, 0.1);
  const double printed =
      potentials::hyperbolic_squared_length(y2, mu, potentials::PoincareForm::AsPrinted);
  const double squared =
      potentials::hyperbolic_squared_length(y2, mu, potentials::PoincareForm::Squared);
  REQUIRE(printed > 0.0);
  REQUIRE(squared > 0.0);
  REQUIRE(printed != Approx(squared));
}

TEST_CASE("sphere transport preserves planar energy values", "[potentials]") {
  const potentials::Energy plane = potentials::mueller_brown();
  const potentials::Energy sphere = potentials::mb_on_sphere();
  Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    Eigen::Vector2d w(rng.uniform(-1.4, 1.1), rng.uniform(-0.4, 1.9));
    const Vec p = potentials::sphere_image_of_plane_point(w);
    REQUIRE(std::abs(p.norm() - 1.0) < 1e-12);
    REQUIRE(sphere.eval(p) == Approx(plane.eval(Vec(w))).epsilon(1e-10));
    // constant along rays from the origin
    REQUIRE(sphere.eval(1.3 * p) == Approx(sphere.eval(p)).epsilon(1e-10));
  }
  // angle chart round trip
  const Eigen::Vector2d w0(0.25, 0.8);
  REQUIRE((potentials::angle_to_plane(potentials::plane_to_angle(w0)) - w0).norm() < 1e-12);
  // transported derivatives agree with finite differences off the z-axis
  Vec p(3);
  p << 0.8, 0.1, 0.59;
  const Vec gfd = oracles::fd_gradient([&](const Vec& q) { return sphere.eval(q); }, p);
  REQUIRE((sphere.gradient(p) - gfd).norm() < 1e-4 * (1.0 + gfd.norm()));
  const Mat hfd = oracles::fd_jacobian([&](const Vec& q) { return sphere.gradient(q); }, p);
  REQUIRE((sphere.hessian(p) - hfd).norm() < 1e-3 * (1.0 + hfd.norm()));
}

TEST_CASE("great-circle restriction of the coordinate product", "[potentials]") {
  // w(t) = (-sin t/√2, cos t, sin t/√2) gives E(t) = -sin²t · cos t / 2 with
  // critical parameters at sin t = 0 and tan²t = 2.
  const potentials::Energy e = potentials::sphere_xyz();
  auto point = [](double t) {
    Vec p(3);
    p << -std::sin(t) / std::sqrt(2.0), std::cos(t), std::sin(t) / std::sqrt(2.0);
    return p;
  };
  for (double t : {0.3, 1.1, 2.4}) {
    REQUIRE(e.eval(point(t)) ==
            Approx(-std::sin(t) * std::sin(t) * std::cos(t) / 2.0).epsilon(1e-12));
  }
  const double tc = std::atan(std::sqrt(2.0));
  const Vec pc = point(tc);
  // ±(1/√3,...) extremum sits on this circle
  REQUIRE(oracles::sphere_xyz_lagrange_residual(pc) < 1e-12);
}
