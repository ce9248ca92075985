#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "kgelab/types.hpp"

namespace kgelab {

struct KMeansResult {
  Eigen::VectorXi assignments;        // point -> cluster index
  Matrix centroids;                   // k x cols
  double inertia = 0.0;               // sum of squared distances to assigned centroid
  int iterations = 0;
  std::vector<double> inertia_trace;  // one entry per iteration, non-increasing
};

// Lloyd's algorithm with seeded random-point initialization (k distinct rows).
// Assignment ties break toward the lowest centroid index; an emptied cluster is
// repaired by taking over the point farthest from its current centroid.
// Converges when an iteration changes no assignment, or at max_iters. k must be
// in [1, points.rows()].
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters = 100);

// Inertia for each k in grid (values > points.rows() are skipped with a note on
// stderr). The caller reads the curve and picks the knee; nothing is automated.
std::vector<std::pair<int, double>> elbow_scan(const Matrix& points, const std::vector<int>& grid,
                                               std::uint64_t seed, int max_iters = 100);

}  // namespace kgelab
