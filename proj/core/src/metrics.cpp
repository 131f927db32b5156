#include "unrn/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace unrn {

double average_precision(const std::vector<int>& ranked_relevance) {
  int total_relevant = 0;
  for (int r : ranked_relevance) total_relevant += (r != 0);
  if (total_relevant == 0) return 0.0;
  double ap = 0.0;
  int hits = 0;
  for (std::size_t k = 0; k < ranked_relevance.size(); ++k) {
    if (ranked_relevance[k] != 0) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return ap / total_relevant;
}

RetrievalResult evaluate_retrieval(const std::vector<Vec>& query_features,
                                   const std::vector<int>& query_ids,
                                   const std::vector<Vec>& gallery_features,
                                   const std::vector<int>& gallery_ids,
                                   const std::vector<int>& cmc_ks) {
  if (query_features.empty() || query_features.size() != query_ids.size()) {
    throw std::invalid_argument("empty or inconsistent query set");
  }
  if (gallery_features.empty() || gallery_features.size() != gallery_ids.size()) {
    throw std::invalid_argument("empty or inconsistent gallery set");
  }
  RetrievalResult result;
  std::map<int, int> cmc_hits;
  for (int k : cmc_ks) cmc_hits[k] = 0;

  std::vector<int> order(gallery_features.size());
  for (std::size_t q = 0; q < query_features.size(); ++q) {
    Vec sims(gallery_features.size());
    for (std::size_t g = 0; g < gallery_features.size(); ++g) {
      sims[g] = cosine_sim(query_features[q], gallery_features[g]);
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (sims[a] != sims[b]) return sims[a] > sims[b];
      return a < b;
    });
    std::vector<int> relevance(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      relevance[r] = gallery_ids[order[r]] == query_ids[q] ? 1 : 0;
    }
    result.mean_ap += average_precision(relevance);
    for (int k : cmc_ks) {
      const std::size_t top = std::min<std::size_t>(k, relevance.size());
      for (std::size_t r = 0; r < top; ++r) {
        if (relevance[r]) {
          cmc_hits[k] += 1;
          break;
        }
      }
    }
  }
  const double n_queries = static_cast<double>(query_features.size());
  result.mean_ap /= n_queries;
  for (int k : cmc_ks) result.cmc[k] = cmc_hits[k] / n_queries;
  return result;
}

double auroc(const std::vector<double>& negatives, const std::vector<double>& positives) {
  if (negatives.empty() || positives.empty()) {
    throw std::invalid_argument("auroc needs both classes nonempty");
  }
  // Mann-Whitney U through midranks, so ties contribute exactly one half.
  struct Scored {
    double score;
    bool positive;
  };
  std::vector<Scored> all;
  all.reserve(negatives.size() + positives.size());
  for (double s : negatives) all.push_back({s, false});
  for (double s : positives) all.push_back({s, true});
  std::sort(all.begin(), all.end(),
            [](const Scored& a, const Scored& b) { return a.score < b.score; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].positive) rank_sum_pos += midrank;
    }
    i = j;
  }
  const double n_pos = static_cast<double>(positives.size());
  const double n_neg = static_cast<double>(negatives.size());
  const double u_stat = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
  return u_stat / (n_pos * n_neg);
}

}  // namespace unrn
