#include "kgelab/kmeans.hpp"

#include <iostream>
#include <limits>
#include <stdexcept>

#include "kgelab/rng.hpp"

namespace kgelab {

namespace {

// Index of the nearest centroid, lowest index on ties.
int nearest(const Matrix& centroids, const Eigen::RowVectorXd& point, double* dist2_out) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  *dist2_out = best_d;
  return best;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || k > n) {
    throw std::invalid_argument("kmeans: k must be in [1, n_points], got k=" + std::to_string(k) +
                                " with n_points=" + std::to_string(n));
  }

  KMeansResult res;
  res.centroids.resize(k, points.cols());
  Rng rng(seed);
  const std::vector<int> init = rng.sample_without_replacement(n, k);
  for (int c = 0; c < k; ++c) res.centroids.row(c) = points.row(init[static_cast<std::size_t>(c)]);

  res.assignments = Eigen::VectorXi::Constant(n, -1);
  Eigen::VectorXd dist2(n);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      double d = 0.0;
      const int c = nearest(res.centroids, points.row(i), &d);
      if (c != res.assignments[i]) changed = true;
      res.assignments[i] = c;
      dist2[i] = d;
      ++counts[static_cast<std::size_t>(c)];
    }

    // Give an empty cluster the point farthest from its own centroid; never
    // drain a cluster down to zero in the process.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      int take = -1;
      double worst = -1.0;
      for (int i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(res.assignments[i])] <= 1) continue;
        if (dist2[i] > worst) {
          worst = dist2[i];
          take = i;
        }
      }
      if (take < 0) continue;  // all clusters are singletons, nothing to move
      --counts[static_cast<std::size_t>(res.assignments[take])];
      res.assignments[take] = c;
      ++counts[static_cast<std::size_t>(c)];
      dist2[take] = 0.0;  // it will seed the centroid it now owns
      changed = true;
    }

    res.centroids.setZero();
    for (int i = 0; i < n; ++i) res.centroids.row(res.assignments[i]) += points.row(i);
    for (int c = 0; c < k; ++c) {
      res.centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      inertia += (points.row(i) - res.centroids.row(res.assignments[i])).squaredNorm();
    }
    res.inertia = inertia;
    res.inertia_trace.push_back(inertia);
    res.iterations = iter + 1;
    if (!changed) break;
  }
  return res;
}

std::vector<std::pair<int, double>> elbow_scan(const Matrix& points, const std::vector<int>& grid,
                                               std::uint64_t seed, int max_iters) {
  std::vector<std::pair<int, double>> out;
  for (int k : grid) {
    if (k < 1 || k > points.rows()) {
      std::cerr << "elbow_scan: skipping k=" << k << " (outside [1, " << points.rows() << "])\n";
      continue;
    }
    out.emplace_back(k, kmeans(points, k, seed, max_iters).inertia);
  }
  return out;
}

}  // namespace kgelab
