#include "unrn/clustering.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace unrn {

PseudoLabeledSet dbscan(const std::vector<Vec>& features, double eps, int min_pts) {
  if (features.empty()) throw std::invalid_argument("dbscan on empty input");
  if (!(eps > 0.0)) throw std::invalid_argument("dbscan eps must be positive");
  if (min_pts < 1) throw std::invalid_argument("dbscan min_pts must be at least 1");

  const int n = static_cast<int>(features.size());
  std::vector<std::vector<int>> neighbors(n);
  for (int i = 0; i < n; ++i) neighbors[i].push_back(i);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = 1.0 - cosine_sim(features[i], features[j]);
      if (d <= eps) {
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
      }
    }
  }
  // Ascending neighbor lists pin both the expansion order and the border
  // tie-break below.
  for (std::vector<int>& nb : neighbors) std::sort(nb.begin(), nb.end());

  std::vector<bool> core(n, false);
  for (int i = 0; i < n; ++i) {
    core[i] = static_cast<int>(neighbors[i].size()) >= min_pts;
  }

  PseudoLabeledSet out;
  out.sample_ids.resize(n);
  for (int i = 0; i < n; ++i) out.sample_ids[i] = i;
  out.labels.assign(n, kOutlierLabel);

  // Expand clusters core-to-core; the scan order pins the id assignment.
  int next_label = 0;
  for (int i = 0; i < n; ++i) {
    if (!core[i] || out.labels[i] != kOutlierLabel) continue;
    out.labels[i] = next_label;
    std::deque<int> queue{i};
    while (!queue.empty()) {
      const int k = queue.front();
      queue.pop_front();
      for (int j : neighbors[k]) {
        if (core[j] && out.labels[j] == kOutlierLabel) {
          out.labels[j] = next_label;
          queue.push_back(j);
        }
      }
    }
    ++next_label;
  }
  out.n_clusters = next_label;

  // Border points: lowest-id core neighbor decides the cluster.
  for (int i = 0; i < n; ++i) {
    if (core[i]) continue;
    for (int j : neighbors[i]) {
      if (core[j]) {
        out.labels[i] = out.labels[j];
        break;
      }
    }
  }

  if (out.n_clusters > 0) {
    out.centers = cluster_centers(features, out.labels, out.n_clusters);
  }
  return out;
}

Matrix cluster_centers(const std::vector<Vec>& features,
                       const std::vector<int>& labels, int n_clusters) {
  if (features.size() != labels.size()) {
    throw std::invalid_argument("dimension mismatch");
  }
  if (n_clusters <= 0) throw std::invalid_argument("n_clusters must be positive");
  const std::size_t dim = features.empty() ? 0 : features[0].size();
  Matrix sums(n_clusters, Vec(dim, 0.0));
  std::vector<int> counts(n_clusters, 0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const int label = labels[i];
    if (label == kOutlierLabel) continue;
    if (label < 0 || label >= n_clusters) {
      throw std::invalid_argument("label out of range");
    }
    for (std::size_t k = 0; k < dim; ++k) sums[label][k] += features[i][k];
    counts[label] += 1;
  }
  Matrix centers(n_clusters);
  for (int c = 0; c < n_clusters; ++c) {
    if (counts[c] == 0) throw std::runtime_error("degenerate center");
    for (double& s : sums[c]) s /= counts[c];
    try {
      centers[c] = l2_normalized(sums[c]);
    } catch (const std::runtime_error&) {
      throw std::runtime_error("degenerate center");
    }
  }
  return centers;
}

}  // namespace unrn
