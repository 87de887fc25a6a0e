// Diffusion maps with density normalization, residual-based selection of
// independent eigenvector coordinates, and Nyström out-of-sample extension.
#pragma once

#include <gradex/sampling.hpp>

#include <algorithm>
#include <vector>

namespace gradex::manifold_learning {

using sampling::PointCloud;

struct DiffusionMapOptions {
  double epsilon = 0.0;  // squared-distance bandwidth; 0 → auto_bandwidth
  double alpha = 1.0;    // density-normalization exponent
  int candidate_count = 0;  // eigenpairs to examine; 0 → min(N−1, max(12, 6d))
  double independence_threshold = 0.2;
  double collinearity_limit = 0.97;
  int min_cloud = 100;
  std::uint64_t seed = 0;
};

struct DiffusionEmbedding {
  double epsilon = 0.0;
  double alpha = 1.0;
  double trivial_eigenvalue = 0.0;  // the excluded top eigenvalue, ≈1
  Vec eigenvalues;                  // candidate spectrum, descending, in (0, 1]
  Mat eigenvectors;                 // N×k Markov eigenvectors, unit norm, sign-fixed
  std::vector<int> selected;        // column indices forming the chart coordinates
  Mat train_points;                 // N×n ambient training cloud
  Vec kernel_mass;                  // raw kernel row sums q_i (self-kernel included)

  int dim() const { return static_cast<int>(selected.size()); }

  // N×d matrix of chart coordinates of the training points.
  Mat coords() const {
    Mat c(eigenvectors.rows(), selected.size());
    for (std::size_t j = 0; j < selected.size(); ++j) c.col(j) = eigenvectors.col(selected[j]);
    return c;
  }
};

inline double auto_bandwidth(const PointCloud& cloud, std::uint64_t seed = 0) {
  const int n = cloud.size();
  if (n < 2) throw DegenerateCloudError("bandwidth needs at least two points");
  std::vector<double> sq;
  if (n <= 64) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        sq.push_back((cloud.points.row(i) - cloud.points.row(j)).squaredNorm());
  } else {
    Rng rng(derive_seed(seed, 0x626e64));
    while (sq.size() < 2000) {
      const int i = static_cast<int>(rng.bits() % n);
      const int j = static_cast<int>(rng.bits() % n);
      if (i == j) continue;
      sq.push_back((cloud.points.row(i) - cloud.points.row(j)).squaredNorm());
    }
  }
  std::nth_element(sq.begin(), sq.begin() + sq.size() / 2, sq.end());
  const double median = sq[sq.size() / 2];
  if (!(median > 0.0)) throw DegenerateCloudError("cloud has zero median pairwise distance");
  return median;
}

namespace detail {

// Leave-one-out locally weighted linear regression residual of candidate y
// against already-selected coordinates S; small residual means y is a
// function of S (a harmonic of an earlier eigenvector).
inline double llr_residual(const Vec& y, const Mat& s, std::uint64_t seed) {
  const int n = static_cast<int>(s.rows());
  const int p = static_cast<int>(s.cols());

  std::vector<double> dists;
  if (n <= 64) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) dists.push_back((s.row(i) - s.row(j)).norm());
  } else {
    Rng rng(derive_seed(seed, 0x6c6c72));
    while (dists.size() < 2000) {
      const int i = static_cast<int>(rng.bits() % n);
      const int j = static_cast<int>(rng.bits() % n);
      if (i == j) continue;
      dists.push_back((s.row(i) - s.row(j)).norm());
    }
  }
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  const double scale = dists[dists.size() / 2] / 3.0;
  if (!(scale > 0.0)) return 0.0;

  double num = 0.0, den = 0.0;
  Mat design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = s;
  for (int i = 0; i < n; ++i) {
    Mat ata = Mat::Zero(p + 1, p + 1);
    Vec atb = Vec::Zero(p + 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double w = std::exp(-(s.row(i) - s.row(j)).squaredNorm() / (scale * scale));
      ata.noalias() += w * design.row(j).transpose() * design.row(j);
      atb.noalias() += w * y[j] * design.row(j).transpose();
    }
    ata.diagonal().array() += 1e-12;
    const Vec beta = ata.ldlt().solve(atb);
    const double prediction = design.row(i).dot(beta);
    num += sq(y[i] - prediction);
    den += sq(y[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

inline double abs_correlation(const Vec& a, const Vec& b) {
  const Vec ac = a.array() - a.mean();
  const Vec bc = b.array() - b.mean();
  const double d = ac.norm() * bc.norm();
  return d > 0.0 ? std::abs(ac.dot(bc)) / d : 1.0;
}

}  // namespace detail

inline DiffusionEmbedding fit(const PointCloud& cloud, int d,
                              const DiffusionMapOptions& opts = {}) {
  const int n = cloud.size();
  if (d < 1) throw ConfigError("embedding dimension must be >= 1");
  if (n < opts.min_cloud)
    throw DegenerateCloudError("cloud has " + std::to_string(n) + " points, need " +
                               std::to_string(opts.min_cloud));
  require_finite(cloud.points, "point cloud");
  if (!cloud.center_in_bounding_box())
    throw DegenerateCloudError("cloud center outside the sample bounding box");

  Mat sqdist(n, n);
  for (int i = 0; i < n; ++i) {
    sqdist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j)
      sqdist(i, j) = sqdist(j, i) = (cloud.points.row(i) - cloud.points.row(j)).squaredNorm();
  }
  if (sqdist.maxCoeff() <= 1e-30)
    throw DegenerateCloudError("kernel matrix is rank one (all points identical)");

  DiffusionEmbedding emb;
  emb.epsilon = opts.epsilon > 0.0 ? opts.epsilon : auto_bandwidth(cloud, opts.seed);
  emb.alpha = opts.alpha;
  emb.train_points = cloud.points;

  const Mat kernel = (-sqdist / emb.epsilon).array().exp();
  emb.kernel_mass = kernel.rowwise().sum();
  const Vec qa = emb.kernel_mass.array().pow(opts.alpha);
  const Mat ktil = kernel.array() / (qa * qa.transpose()).array();
  const Vec rho = ktil.rowwise().sum();
  const Vec rho_isqrt = rho.cwiseSqrt().cwiseInverse();
  const Mat sym = rho_isqrt.asDiagonal() * ktil * rho_isqrt.asDiagonal();

  const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (sym + sym.transpose()));
  if (es.info() != Eigen::Success) throw EmbeddingFailureError("diffusion kernel eigensolve failed");

  const int k = std::min(n - 1, opts.candidate_count > 0 ? opts.candidate_count
                                                         : std::max(12, 6 * d));
  emb.trivial_eigenvalue = es.eigenvalues()(n - 1);
  std::vector<int> order;  // candidate indices in the ascending spectrum, descending μ
  for (int i = n - 2; i >= 0 && static_cast<int>(order.size()) < k; --i)
    if (es.eigenvalues()(i) > 1e-12) order.push_back(i);
  if (order.empty()) throw EmbeddingFailureError("no usable diffusion eigenvalues");

  emb.eigenvalues.resize(order.size());
  emb.eigenvectors.resize(n, order.size());
  for (std::size_t c = 0; c < order.size(); ++c) {
    emb.eigenvalues[c] = std::min(es.eigenvalues()(order[c]), 1.0);
    Vec v = rho_isqrt.cwiseProduct(es.eigenvectors().col(order[c]));
    v /= v.norm();
    int arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    emb.eigenvectors.col(c) = v;
  }

  // Greedy selection of functionally independent coordinates.
  emb.selected.push_back(0);
  for (int c = 1; c < emb.eigenvectors.cols() && emb.dim() < d; ++c) {
    Mat chosen(n, emb.selected.size());
    for (std::size_t j = 0; j < emb.selected.size(); ++j)
      chosen.col(j) = emb.eigenvectors.col(emb.selected[j]);
    if (detail::llr_residual(emb.eigenvectors.col(c), chosen, opts.seed) <=
        opts.independence_threshold)
      continue;
    bool collinear = false;
    for (int j : emb.selected)
      if (detail::abs_correlation(emb.eigenvectors.col(c), emb.eigenvectors.col(j)) >=
          opts.collinearity_limit)
        collinear = true;
    if (collinear) continue;
    emb.selected.push_back(c);
  }
  if (emb.dim() < d)
    throw EmbeddingFailureError("found " + std::to_string(emb.dim()) +
                                " independent coordinates, need " + std::to_string(d));
  return emb;
}

// Markov transition row from an arbitrary ambient point to the training
// points, built exactly as in fit (self-consistent at training rows).
inline Vec extension_weights(const DiffusionEmbedding& emb, const Vec& p) {
  const int n = static_cast<int>(emb.train_points.rows());
  Vec kr(n);
  for (int j = 0; j < n; ++j)
    kr[j] = std::exp(-(p.transpose() - emb.train_points.row(j)).squaredNorm() / emb.epsilon);
  const double mass = kr.sum();
  if (mass < 1e-12)
    throw OutOfRangeError("point too far from the training cloud (kernel mass " +
                          format_double(mass) + ")");
  const Vec qa = emb.kernel_mass.array().pow(emb.alpha);
  const Vec ktil = kr.array() / (std::pow(mass, emb.alpha) * qa.array());
  return ktil / ktil.sum();
}

// Nyström extension of the selected coordinates to a new ambient point.
inline Vec extend(const DiffusionEmbedding& emb, const Vec& p) {
  const Vec row = extension_weights(emb, p);
  Vec u(emb.dim());
  for (int j = 0; j < emb.dim(); ++j) {
    const int c = emb.selected[j];
    u[j] = row.dot(emb.eigenvectors.col(c)) / emb.eigenvalues[c];
  }
  return u;
}

}  // namespace gradex::manifold_learning
