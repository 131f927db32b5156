#pragma once

#include <map>
#include <vector>

#include "unrn/memory_bank.hpp"
#include "unrn/numerics.hpp"

namespace unrn {

// Value plus sparse gradients. feature_grads is keyed by sample id,
// center_grads by classifier row. Batch means are already folded in, so
// outputs of different losses can be combined by plain weighted addition.
struct LossOutput {
  double value = 0.0;
  std::map<int, Vec> feature_grads;
  std::map<int, Vec> center_grads;
};

struct LossWeights {
  double lambda_tri = 1.0;
  double lambda_ct = 0.05;
  double lambda_reg = 1.0;
};

// Credibility-weighted identity loss: cross entropy of softmax over
// sigma-scaled cosine similarities to the class centers, each sample's term
// multiplied by its omega. The plain ID loss is the omega == 1 case.
// Gradients flow to features and centers; omega is a constant.
LossOutput id_loss(const std::vector<int>& sample_ids,
                   const std::vector<Vec>& features,
                   const std::vector<int>& labels,
                   const std::vector<double>& omegas,
                   const Matrix& class_centers, double sigma);

// id_loss with every omega fixed at 1 (labeled source batches).
LossOutput source_id_loss(const std::vector<int>& sample_ids,
                          const std::vector<Vec>& features,
                          const std::vector<int>& labels,
                          const Matrix& class_centers, double sigma);

struct TripletIdx {
  int anchor = 0;    // positions into the batch arrays, not sample ids
  int positive = 0;
  int negative = 0;
};

// Hardest positive (lowest cosine) and hardest negative (highest cosine) per
// anchor under the given labels; ties prefer the lowest sample id. Anchors
// missing either side, and outlier-labeled samples, are skipped.
std::vector<TripletIdx> batch_hard_triplets(const std::vector<int>& sample_ids,
                                            const std::vector<Vec>& features,
                                            const std::vector<int>& labels);

struct WeightedTriplet {
  double value = 0.0;
  double dvalue_ds_ap = 0.0;
  double dvalue_ds_an = 0.0;
};

// Softmax triplet on one (s_ap, s_an) pair with explicit weights:
//   -log( w_ap e^{s_ap} / (w_ap e^{s_ap} + w_an e^{s_an}) ).
// Weights must be positive and are constants for the gradient.
WeightedTriplet weighted_softmax_triplet(double s_ap, double s_an,
                                         double w_ap, double w_an);

// Mean weighted softmax triplet over the list, pair weights
// pair_credibility(u_anchor, u_other). Plain softmax triplet is the u == 0
// case (both weights 2, which cancels exactly).
LossOutput utri_loss(const std::vector<int>& sample_ids,
                     const std::vector<Vec>& features,
                     const std::vector<double>& uncertainties,
                     const std::vector<TripletIdx>& triplets);

struct CircleParams {
  double margin = 0.25;
  double gamma = 32.0;
  bool self_paced = true;  // false: raw cosine similarities in the exponents
};

// Self-paced similarity re-weighting, clipped at zero:
//   positive: gamma * [1 + m - s]+ * (s - (1 - m))
//   negative: gamma * [s + m]+ * (s - m)
// Derivatives are 2*gamma*(1-s) and 2*gamma*s inside the active region, 0
// outside; the kink sits at s = -m for negatives (s = 1 + m is unreachable
// for cosines).
double self_paced_positive(double s, const CircleParams& p);
double self_paced_positive_deriv(double s, const CircleParams& p);
double self_paced_negative(double s, const CircleParams& p);
double self_paced_negative_deriv(double s, const CircleParams& p);

// Credibility-weighted contrastive loss of each batch anchor against the
// memory bank: mean over anchors of log(1 + S_neg * S_pos) with
//   S_pos = sum_p w_p e^{-pos(s)},  S_neg = sum_n w_n e^{neg(s)}.
// Anchors with an empty positive set contribute 0. Gradients reach anchor
// features only; bank entries and source centers are frozen. Pair weights are
// the mean of the two credibilities, so u == 0 weighs a pair by exactly 1;
// use_stored_uncertainty = false forces that plain contrastive counterpart.
LossOutput uct_loss(const std::vector<int>& sample_ids,
                    const std::vector<Vec>& features,
                    const std::vector<int>& labels,
                    const std::vector<double>& uncertainties,
                    const MemoryBank& bank, const CircleParams& circle,
                    bool use_stored_uncertainty = true);

// Mean uncertainty with gradients channeled through du_dfeature (row i is
// d u_i / d f_i). This is the only term whose gradient sees u itself.
// An empty batch throws.
LossOutput reg_loss(const std::vector<int>& sample_ids,
                    const std::vector<double>& uncertainties,
                    const std::vector<Vec>& du_dfeature);

// id + lambda_tri * tri + lambda_ct * ct + lambda_reg * reg, values and
// gradient maps alike.
LossOutput total_target_loss(const LossOutput& id_term, const LossOutput& tri_term,
                             const LossOutput& ct_term, const LossOutput& reg_term,
                             const LossWeights& weights);

}  // namespace unrn
