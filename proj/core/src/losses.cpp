#include "unrn/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "unrn/clustering.hpp"
#include "unrn/uncertainty.hpp"

namespace unrn {

namespace {

void add_scaled(Vec& acc, const Vec& g, double scale) {
  if (acc.empty()) acc.assign(g.size(), 0.0);
  if (acc.size() != g.size()) throw std::invalid_argument("dimension mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) acc[i] += scale * g[i];
}

void merge_scaled(std::map<int, Vec>& acc, const std::map<int, Vec>& grads,
                  double scale) {
  for (const auto& [key, g] : grads) add_scaled(acc[key], g, scale);
}

}  // namespace

LossOutput id_loss(const std::vector<int>& sample_ids,
                   const std::vector<Vec>& features,
                   const std::vector<int>& labels,
                   const std::vector<double>& omegas,
                   const Matrix& class_centers, double sigma) {
  const std::size_t n = sample_ids.size();
  if (features.size() != n || labels.size() != n || omegas.size() != n) {
    throw std::invalid_argument("dimension mismatch");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const int n_classes = static_cast<int>(class_centers.size());
  LossOutput out;
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<CosineSimGrad> cos_grads(n_classes);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw std::invalid_argument("label out of range");
    }
    Vec scores(n_classes);
    for (int c = 0; c < n_classes; ++c) {
      cos_grads[c] = cosine_sim_grad(features[i], class_centers[c]);
      scores[c] = sigma * cos_grads[c].value;
    }
    const Vec p = softmax(scores, 1.0);
    out.value += -omegas[i] * std::log(p[labels[i]]) * inv_n;

    // d(-w log p_y)/d score_c = w (p_c - [c == y]); chain through the scaled
    // cosine into the feature and the centers.
    Vec& g_feat = out.feature_grads[sample_ids[i]];
    if (g_feat.empty()) g_feat.assign(features[i].size(), 0.0);
    for (int c = 0; c < n_classes; ++c) {
      const double g_score =
          omegas[i] * (p[c] - (c == labels[i] ? 1.0 : 0.0)) * inv_n;
      add_scaled(g_feat, cos_grads[c].grad_a, g_score * sigma);
      add_scaled(out.center_grads[c], cos_grads[c].grad_b, g_score * sigma);
    }
  }
  return out;
}

LossOutput source_id_loss(const std::vector<int>& sample_ids,
                          const std::vector<Vec>& features,
                          const std::vector<int>& labels,
                          const Matrix& class_centers, double sigma) {
  return id_loss(sample_ids, features, labels,
                 std::vector<double>(sample_ids.size(), 1.0), class_centers, sigma);
}

std::vector<TripletIdx> batch_hard_triplets(const std::vector<int>& sample_ids,
                                            const std::vector<Vec>& features,
                                            const std::vector<int>& labels) {
  const std::size_t n = sample_ids.size();
  if (features.size() != n || labels.size() != n) {
    throw std::invalid_argument("dimension mismatch");
  }
  std::vector<TripletIdx> out;
  for (std::size_t a = 0; a < n; ++a) {
    if (labels[a] == kOutlierLabel) continue;
    int best_pos = -1, best_neg = -1;
    double pos_sim = 0.0, neg_sim = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a || labels[j] == kOutlierLabel) continue;
      const double s = cosine_sim(features[a], features[j]);
      if (labels[j] == labels[a]) {
        if (best_pos < 0 || s < pos_sim ||
            (s == pos_sim && sample_ids[j] < sample_ids[best_pos])) {
          best_pos = static_cast<int>(j);
          pos_sim = s;
        }
      } else {
        if (best_neg < 0 || s > neg_sim ||
            (s == neg_sim && sample_ids[j] < sample_ids[best_neg])) {
          best_neg = static_cast<int>(j);
          neg_sim = s;
        }
      }
    }
    if (best_pos >= 0 && best_neg >= 0) {
      out.push_back(TripletIdx{static_cast<int>(a), best_pos, best_neg});
    }
  }
  return out;
}

WeightedTriplet weighted_softmax_triplet(double s_ap, double s_an, double w_ap,
                                         double w_an) {
  if (!(w_ap > 0.0) || !(w_an > 0.0)) {
    throw std::invalid_argument("triplet weights must be positive");
  }
  WeightedTriplet out;
  // -log softmax of the weighted positive term, written through log1p so the
  // well-classified regime stays accurate.
  out.value = std::log1p((w_an / w_ap) * std::exp(s_an - s_ap));
  const double e_ap = w_ap * std::exp(s_ap);
  const double e_an = w_an * std::exp(s_an);
  const double sig = e_an / (e_ap + e_an);
  out.dvalue_ds_ap = -sig;
  out.dvalue_ds_an = sig;
  return out;
}

LossOutput utri_loss(const std::vector<int>& sample_ids,
                     const std::vector<Vec>& features,
                     const std::vector<double>& uncertainties,
                     const std::vector<TripletIdx>& triplets) {
  const std::size_t n = sample_ids.size();
  if (features.size() != n || uncertainties.size() != n) {
    throw std::invalid_argument("dimension mismatch");
  }
  LossOutput out;
  if (triplets.empty()) return out;
  const double inv_m = 1.0 / static_cast<double>(triplets.size());

  auto grad_at = [&](int idx) -> Vec& {
    Vec& g = out.feature_grads[sample_ids[idx]];
    if (g.empty()) g.assign(features[idx].size(), 0.0);
    return g;
  };

  for (const TripletIdx& t : triplets) {
    if (t.anchor < 0 || t.positive < 0 || t.negative < 0 ||
        t.anchor >= static_cast<int>(n) || t.positive >= static_cast<int>(n) ||
        t.negative >= static_cast<int>(n)) {
      throw std::invalid_argument("triplet index out of range");
    }
    const CosineSimGrad ap = cosine_sim_grad(features[t.anchor], features[t.positive]);
    const CosineSimGrad an = cosine_sim_grad(features[t.anchor], features[t.negative]);
    const double w_ap =
        pair_credibility(uncertainties[t.anchor], uncertainties[t.positive]);
    const double w_an =
        pair_credibility(uncertainties[t.anchor], uncertainties[t.negative]);
    const WeightedTriplet wt = weighted_softmax_triplet(ap.value, an.value, w_ap, w_an);
    out.value += wt.value * inv_m;
    add_scaled(grad_at(t.anchor), ap.grad_a, wt.dvalue_ds_ap * inv_m);
    add_scaled(grad_at(t.anchor), an.grad_a, wt.dvalue_ds_an * inv_m);
    add_scaled(grad_at(t.positive), ap.grad_b, wt.dvalue_ds_ap * inv_m);
    add_scaled(grad_at(t.negative), an.grad_b, wt.dvalue_ds_an * inv_m);
  }
  return out;
}

double self_paced_positive(double s, const CircleParams& p) {
  if (!p.self_paced) return s;
  const double alpha = std::max(1.0 + p.margin - s, 0.0);
  return p.gamma * alpha * (s - (1.0 - p.margin));
}

double self_paced_positive_deriv(double s, const CircleParams& p) {
  if (!p.self_paced) return 1.0;
  if (s >= 1.0 + p.margin) return 0.0;
  return 2.0 * p.gamma * (1.0 - s);
}

double self_paced_negative(double s, const CircleParams& p) {
  if (!p.self_paced) return s;
  const double alpha = std::max(s + p.margin, 0.0);
  return p.gamma * alpha * (s - p.margin);
}

double self_paced_negative_deriv(double s, const CircleParams& p) {
  if (!p.self_paced) return 1.0;
  if (s <= -p.margin) return 0.0;
  return 2.0 * p.gamma * s;
}

LossOutput uct_loss(const std::vector<int>& sample_ids,
                    const std::vector<Vec>& features,
                    const std::vector<int>& labels,
                    const std::vector<double>& uncertainties,
                    const MemoryBank& bank, const CircleParams& circle,
                    bool use_stored_uncertainty) {
  const std::size_t n = sample_ids.size();
  if (features.size() != n || labels.size() != n || uncertainties.size() != n) {
    throw std::invalid_argument("dimension mismatch");
  }
  LossOutput out;
  int n_anchors = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kOutlierLabel) ++n_anchors;
  }
  if (n_anchors == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n_anchors);

  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == kOutlierLabel) continue;
    const BankPartition part = bank.partition_for_anchor(labels[i]);
    const double u_anchor = use_stored_uncertainty ? uncertainties[i] : 0.0;

    // Two passes: sums first, then gradient scaled by the shared prefactor.
    double s_pos = 0.0, s_neg = 0.0;
    std::vector<double> pos_terms(part.positives.size());
    std::vector<double> pos_sims(part.positives.size());
    std::vector<double> neg_terms(part.negatives.size());
    std::vector<double> neg_sims(part.negatives.size());
    // Mean of the two credibilities, not the raw pair sum: u = 0 must give
    // weight exactly 1 so the loss degrades to the plain pairwise form.
    for (std::size_t k = 0; k < part.positives.size(); ++k) {
      const BankPairRef& ref = part.positives[k];
      const double w = 0.5 * pair_credibility(
          u_anchor, use_stored_uncertainty ? ref.uncertainty : 0.0);
      pos_sims[k] = cosine_sim(features[i], *ref.feature);
      pos_terms[k] = w * std::exp(-self_paced_positive(pos_sims[k], circle));
      s_pos += pos_terms[k];
    }
    for (std::size_t k = 0; k < part.negatives.size(); ++k) {
      const BankPairRef& ref = part.negatives[k];
      const double w = 0.5 * pair_credibility(
          u_anchor, use_stored_uncertainty ? ref.uncertainty : 0.0);
      neg_sims[k] = cosine_sim(features[i], *ref.feature);
      neg_terms[k] = w * std::exp(self_paced_negative(neg_sims[k], circle));
      s_neg += neg_terms[k];
    }
    if (part.positives.empty()) continue;  // empty positive sum zeroes the product
    out.value += std::log1p(s_neg * s_pos) * inv_n;

    Vec& g_feat = out.feature_grads[sample_ids[i]];
    if (g_feat.empty()) g_feat.assign(features[i].size(), 0.0);
    const double pref = inv_n / (1.0 + s_neg * s_pos);
    for (std::size_t k = 0; k < part.positives.size(); ++k) {
      const double dterm_ds =
          -pos_terms[k] * self_paced_positive_deriv(pos_sims[k], circle);
      const CosineSimGrad cg = cosine_sim_grad(features[i], *part.positives[k].feature);
      add_scaled(g_feat, cg.grad_a, pref * s_neg * dterm_ds);
    }
    for (std::size_t k = 0; k < part.negatives.size(); ++k) {
      const double dterm_ds =
          neg_terms[k] * self_paced_negative_deriv(neg_sims[k], circle);
      const CosineSimGrad cg = cosine_sim_grad(features[i], *part.negatives[k].feature);
      add_scaled(g_feat, cg.grad_a, pref * s_pos * dterm_ds);
    }
  }
  return out;
}

LossOutput reg_loss(const std::vector<int>& sample_ids,
                    const std::vector<double>& uncertainties,
                    const std::vector<Vec>& du_dfeature) {
  const std::size_t n = sample_ids.size();
  if (uncertainties.size() != n || du_dfeature.size() != n) {
    throw std::invalid_argument("dimension mismatch");
  }
  if (n == 0) throw std::invalid_argument("empty batch");
  LossOutput out;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.value += uncertainties[i] * inv_n;
    add_scaled(out.feature_grads[sample_ids[i]], du_dfeature[i], inv_n);
  }
  return out;
}

LossOutput total_target_loss(const LossOutput& id_term, const LossOutput& tri_term,
                             const LossOutput& ct_term, const LossOutput& reg_term,
                             const LossWeights& weights) {
  LossOutput out;
  out.value = id_term.value + weights.lambda_tri * tri_term.value +
              weights.lambda_ct * ct_term.value + weights.lambda_reg * reg_term.value;
  merge_scaled(out.feature_grads, id_term.feature_grads, 1.0);
  merge_scaled(out.feature_grads, tri_term.feature_grads, weights.lambda_tri);
  merge_scaled(out.feature_grads, ct_term.feature_grads, weights.lambda_ct);
  merge_scaled(out.feature_grads, reg_term.feature_grads, weights.lambda_reg);
  merge_scaled(out.center_grads, id_term.center_grads, 1.0);
  merge_scaled(out.center_grads, tri_term.center_grads, weights.lambda_tri);
  merge_scaled(out.center_grads, ct_term.center_grads, weights.lambda_ct);
  merge_scaled(out.center_grads, reg_term.center_grads, weights.lambda_reg);
  return out;
}

}  // namespace unrn
