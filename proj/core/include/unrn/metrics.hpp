#pragma once

#include <map>
#include <vector>

#include "unrn/numerics.hpp"

namespace unrn {

// AP = (1/R) * sum over relevant ranks k of precision@k, over a ranked 0/1
// relevance list. Zero relevant items gives 0 by convention.
double average_precision(const std::vector<int>& ranked_relevance);

struct RetrievalResult {
  double mean_ap = 0.0;
  std::map<int, double> cmc;  // k -> fraction of queries with a hit in top k
};

// Ranks the gallery per query by descending cosine similarity, ties broken
// toward the lower gallery index. Queries without any matching gallery id
// contribute AP 0 and a CMC miss. Throws on an empty query or gallery set.
RetrievalResult evaluate_retrieval(const std::vector<Vec>& query_features,
                                   const std::vector<int>& query_ids,
                                   const std::vector<Vec>& gallery_features,
                                   const std::vector<int>& gallery_ids,
                                   const std::vector<int>& cmc_ks = {1, 5, 10});

// Probability that a score drawn from `positives` exceeds one drawn from
// `negatives`, ties counting half (rank-based, equivalent to ROC area).
// Throws when either side is empty.
double auroc(const std::vector<double>& negatives, const std::vector<double>& positives);

}  // namespace unrn
