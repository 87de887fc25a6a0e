#include <gradex/manifold_learning.hpp>
#include <gradex/sampling.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace gradex;
using Catch::Approx;

namespace {

sampling::PointCloud cloud_from(const Mat& pts) {
  sampling::PointCloud c;
  c.points = pts;
  c.center = pts.row(0).transpose();
  return c;
}

Mat noisy_circle(int n, std::uint64_t seed, double radius = 1.0, double noise = 0.01) {
  Rng rng(seed);
  Mat pts(n, 2);
  for (int i = 0; i < n; ++i) {
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    pts.row(i) << radius * std::cos(a) + noise * rng.normal(),
        radius * std::sin(a) + noise * rng.normal();
  }
  return pts;
}

}  // namespace

TEST_CASE("bandwidth scales quadratically with the data scale", "[manifold]") {
  const Mat pts = noisy_circle(300, 5);
  const auto small = cloud_from(pts);
  const auto large = cloud_from(Mat(2.0 * pts));
  const double e1 = manifold_learning::auto_bandwidth(small);
  const double e2 = manifold_learning::auto_bandwidth(large);
  REQUIRE(e1 > 0.0);
  REQUIRE(e2 / e1 == Approx(4.0).epsilon(0.25));
}

TEST_CASE("one-dimensional embedding of a noisy circle", "[manifold]") {
  const auto cloud = cloud_from(noisy_circle(300, 17));
  const auto emb = manifold_learning::fit(cloud, 1, {});
  REQUIRE(emb.dim() == 1);
  REQUIRE(emb.epsilon > 0.0);
  REQUIRE(emb.trivial_eigenvalue > 0.9);
  for (int i = 0; i + 1 < emb.eigenvalues.size(); ++i) {
    REQUIRE(emb.eigenvalues[i] > 0.0);
    REQUIRE(emb.eigenvalues[i] <= 1.0 + 1e-12);
    REQUIRE(emb.eigenvalues[i] >= emb.eigenvalues[i + 1] - 1e-12);
  }
  REQUIRE(emb.coords().rows() == 300);
  REQUIRE(emb.coords().cols() == 1);
  REQUIRE(emb.kernel_mass.minCoeff() > 0.0);
}

TEST_CASE("extension reproduces training coordinates exactly", "[manifold]") {
  const auto cloud = cloud_from(noisy_circle(200, 23));
  const auto emb = manifold_learning::fit(cloud, 1, {});
  const Mat coords = emb.coords();
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vec ext = manifold_learning::extend(emb, cloud.points.row(i).transpose());
    worst = std::max(worst, (ext - coords.row(i).transpose()).cwiseAbs().maxCoeff());
  }
  REQUIRE(worst < 1e-10);
  // extension is continuous: nearby queries give nearby coordinates
  const Vec p = cloud.points.row(0).transpose();
  const Vec q = p + Vec::Constant(2, 1e-4);
  REQUIRE((manifold_learning::extend(emb, p) - manifold_learning::extend(emb, q)).norm() < 1e-2);
}

TEST_CASE("dependent harmonics are skipped when picking coordinates", "[manifold]") {
  // A 4:1 strip: the second and third eigenvectors are higher harmonics of the
  // first (functions of the same long coordinate), so the second chart
  // coordinate must come from a later eigenvector.
  Rng rng(31);
  const int n = 500;
  Mat pts(n, 2);
  for (int i = 0; i < n; ++i) pts.row(i) << rng.uniform(0.0, 2.0), rng.uniform(0.0, 0.5);
  const auto emb = manifold_learning::fit(cloud_from(pts), 2, {});
  REQUIRE(emb.selected.size() == 2);
  REQUIRE(emb.selected[0] == 0);
  REQUIRE(emb.selected[1] >= 2);
  // the two selected coordinates are not functions of each other: correlation
  // of the second with any polynomial of the first stays small
  const Mat c = emb.coords();
  const Vec a = c.col(0), b = c.col(1);
  Mat design(n, 3);
  design.col(0) = Vec::Ones(n);
  design.col(1) = a;
  design.col(2) = a.cwiseProduct(a);
  const Vec fitted = design * design.colPivHouseholderQr().solve(b);
  const double residual = (b - fitted).norm() / b.norm();
  REQUIRE(residual > 0.3);
}

TEST_CASE("small clouds are rejected", "[manifold]") {
  const auto cloud = cloud_from(noisy_circle(50, 37));
  REQUIRE_THROWS_AS(manifold_learning::fit(cloud, 1, {}), DegenerateCloudError);
}

TEST_CASE("embedding is deterministic including eigenvector signs", "[manifold]") {
  const auto cloud = cloud_from(noisy_circle(150, 41));
  const auto e1 = manifold_learning::fit(cloud, 1, {});
  const auto e2 = manifold_learning::fit(cloud, 1, {});
  REQUIRE((e1.coords() - e2.coords()).norm() == 0.0);
  REQUIRE(e1.epsilon == e2.epsilon);
}

TEST_CASE("explicit bandwidth is honored", "[manifold]") {
  const auto cloud = cloud_from(noisy_circle(150, 43));
  manifold_learning::DiffusionMapOptions opts;
  opts.epsilon = 0.35;
  const auto emb = manifold_learning::fit(cloud, 1, opts);
  REQUIRE(emb.epsilon == 0.35);
}
