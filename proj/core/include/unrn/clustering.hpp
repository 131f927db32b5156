#pragma once

#include <vector>

#include "unrn/numerics.hpp"

namespace unrn {

inline constexpr int kOutlierLabel = -1;

struct PseudoLabeledSet {
  std::vector<int> sample_ids;  // position i holds the id of sample i
  std::vector<int> labels;      // cluster id, or kOutlierLabel
  int n_clusters = 0;
  Matrix centers;               // n_clusters rows, unit length
};

// DBSCAN on cosine distance d(a, b) = 1 - cosine_sim(a, b), neighborhoods
// d <= eps inclusive of the point itself. The result is deterministic:
//  - cluster ids follow first-discovery order scanning sample ids ascending,
//  - a border point within eps of several clusters joins the cluster of the
//    lowest-id core point among them.
// Points reachable from no core point get kOutlierLabel. Throws on empty
// input, eps <= 0 or min_pts < 1.
PseudoLabeledSet dbscan(const std::vector<Vec>& features, double eps, int min_pts);

// Row k is the L2-normalized mean of the features labeled k. Outliers are
// skipped. An empty cluster or a zero mean throws std::runtime_error(
// "degenerate center").
Matrix cluster_centers(const std::vector<Vec>& features,
                       const std::vector<int>& labels, int n_clusters);

}  // namespace unrn
