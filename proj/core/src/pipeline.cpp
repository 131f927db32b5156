#include "unrn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "unrn/losses.hpp"
#include "unrn/mean_teacher.hpp"
#include "unrn/rng.hpp"

#ifndef UNRN_BUILD_REVISION
#define UNRN_BUILD_REVISION "unknown"
#endif

namespace unrn {

namespace {

using nlohmann::json;

// Stream tags for the trainer's RNG consumers.
constexpr std::uint64_t kInitTag = 0x51;
constexpr std::uint64_t kPretrainTag = 0xA0;
constexpr std::uint64_t kFinetuneTag = 0xF7;

Matrix normalized_rows(const Matrix& rows) {
  Matrix out;
  out.reserve(rows.size());
  for (const Vec& r : rows) out.push_back(l2_normalized(r));
  return out;
}

// Bit-level digest of the parameter vector; used to assert that only
// ema_update ever touches the teacher.
std::uint64_t bit_checksum(const std::vector<double>& v) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xFF;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

// PK batch: p groups (all of them when fewer exist), k members each, with
// replacement only when a group is smaller than k. Returns positions.
std::vector<int> sample_pk(Xoshiro256& rng, const std::vector<std::vector<int>>& groups,
                           int p, int k) {
  std::vector<int> group_ids;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!groups[g].empty()) group_ids.push_back(static_cast<int>(g));
  }
  if (group_ids.empty()) return {};
  const int p_eff = std::min<int>(p, static_cast<int>(group_ids.size()));
  for (int t = 0; t < p_eff; ++t) {
    const int j = t + static_cast<int>(rng.uniform_index(group_ids.size() - t));
    std::swap(group_ids[t], group_ids[j]);
  }
  std::vector<int> batch;
  batch.reserve(static_cast<std::size_t>(p_eff) * k);
  for (int t = 0; t < p_eff; ++t) {
    const std::vector<int>& members = groups[group_ids[t]];
    if (static_cast<int>(members.size()) >= k) {
      std::vector<int> pool = members;
      for (int s = 0; s < k; ++s) {
        const int j = s + static_cast<int>(rng.uniform_index(pool.size() - s));
        std::swap(pool[s], pool[j]);
        batch.push_back(pool[s]);
      }
    } else {
      for (int s = 0; s < k; ++s) {
        batch.push_back(members[rng.uniform_index(members.size())]);
      }
    }
  }
  return batch;
}

struct BatchForward {
  std::vector<int> positions;
  std::vector<int> ids;
  std::vector<EncoderActivations> acts;  // student
  std::vector<Vec> student_features;
  std::vector<Vec> teacher_features;
};

BatchForward forward_batch(const TrainerState& state, const Dataset& data,
                           const std::vector<int>& positions, bool with_teacher) {
  BatchForward out;
  out.positions = positions;
  for (int pos : positions) {
    const Sample& s = data.samples[pos];
    out.ids.push_back(s.sample_id);
    out.acts.push_back(encoder_forward_detailed(state.student, s.input));
    out.student_features.push_back(out.acts.back().feature);
    if (with_teacher) {
      out.teacher_features.push_back(encoder_forward(state.teacher, s.input));
    }
  }
  return out;
}

struct UEstimate {
  double u = 0.0;
  Vec du_dstudent;
};

UEstimate estimate_uncertainty(const TrainConfig& config, const ClusterRound& rd,
                               const Vec& f_student, const Vec& f_teacher) {
  UEstimate out;
  if (config.uncertainty_mode == UncertaintyMode::kFeatureConsistency) {
    const CredibilityGrad g = feature_consistency_uncertainty_grad(f_student, f_teacher);
    out.u = g.cred.u;
    out.du_dstudent = g.du_dstudent;
  } else {
    const CredibilityGrad g = sample_uncertainty_grad(rd.refs, f_student, f_teacher,
                                                      config.softmax_temperature);
    out.u = g.cred.u;
    out.du_dstudent = g.du_dstudent;
  }
  return out;
}

// Flattens sparse feature gradients back onto encoder parameters. Duplicate
// batch entries share one map key, so each id is backpropagated once.
void backprop_batch(const TrainerState& state, const Dataset& data,
                    const BatchForward& batch, const std::map<int, Vec>& feature_grads,
                    std::vector<double>& param_grads) {
  std::map<int, int> first_occurrence;
  for (std::size_t i = 0; i < batch.ids.size(); ++i) {
    first_occurrence.emplace(batch.ids[i], static_cast<int>(i));
  }
  for (const auto& [sid, g_feat] : feature_grads) {
    const auto it = first_occurrence.find(sid);
    if (it == first_occurrence.end()) {
      throw std::logic_error("gradient for sample outside the batch");
    }
    const int i = it->second;
    const std::vector<double> g = encoder_backward(
        state.student, data.samples[batch.positions[i]].input, batch.acts[i], g_feat);
    for (std::size_t k = 0; k < g.size(); ++k) param_grads[k] += g[k];
  }
}

void matrix_adam_step(Matrix& rows, const std::map<int, Vec>& grads, AdamState& state,
                      const AdamConfig& config) {
  if (rows.empty()) return;
  const std::size_t dim = rows[0].size();
  std::vector<double> flat(rows.size() * dim, 0.0);
  std::vector<double> flat_grads(rows.size() * dim, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].begin(), rows[r].end(), flat.begin() + r * dim);
  }
  for (const auto& [row, g] : grads) {
    if (row < 0 || row >= static_cast<int>(rows.size())) {
      throw std::logic_error("center gradient row out of range");
    }
    std::copy(g.begin(), g.end(), flat_grads.begin() + row * dim);
  }
  adam_step(flat, flat_grads, state, config);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(flat.begin() + r * dim, flat.begin() + (r + 1) * dim, rows[r].begin());
  }
}

std::vector<std::vector<int>> group_by_identity(const Dataset& data, int n_ids) {
  std::vector<std::vector<int>> groups(n_ids);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const int id = data.samples[i].true_id;
    if (id < 0 || id >= n_ids) throw std::invalid_argument("identity out of range");
    groups[id].push_back(static_cast<int>(i));
  }
  return groups;
}

// Measured disagreement for every clustered target sample, split by pseudo
// correctness. Diagnostics only: ignores the loss toggles and
// force_zero_uncertainty, so identically-trained models report identical
// splits no matter which losses produced them.
struct USplit {
  std::vector<double> u_correct;
  std::vector<double> u_wrong;
};

USplit uncertainty_split(const TrainerState& state, const ClusterRound& rd,
                         const Dataset& target, const TrainConfig& config) {
  USplit split;
  for (std::size_t i = 0; i < target.samples.size(); ++i) {
    if (rd.correctness[i] == PseudoCorrectness::kOutlier) continue;
    const Vec f_s = encoder_forward(state.student, target.samples[i].input);
    const Vec f_t = encoder_forward(state.teacher, target.samples[i].input);
    double u = 0.0;
    if (config.uncertainty_mode == UncertaintyMode::kFeatureConsistency) {
      u = feature_consistency_uncertainty(f_s, f_t).u;
    } else {
      u = sample_uncertainty(rd.refs, f_s, f_t, config.softmax_temperature).u;
    }
    if (rd.correctness[i] == PseudoCorrectness::kCorrect) {
      split.u_correct.push_back(u);
    } else {
      split.u_wrong.push_back(u);
    }
  }
  return split;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

UncertaintyHistogram build_histogram(const USplit& split, int bins) {
  UncertaintyHistogram hist;
  double hi = 0.0;
  for (double u : split.u_correct) hi = std::max(hi, u);
  for (double u : split.u_wrong) hi = std::max(hi, u);
  if (!(hi > 0.0)) hi = 1e-9;
  const double width = hi / bins;
  hist.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) hist.bin_edges[b] = b * width;
  hist.count_correct.assign(bins, 0);
  hist.count_wrong.assign(bins, 0);
  auto bin_of = [&](double u) {
    return std::min(static_cast<int>(u / width), bins - 1);
  };
  for (double u : split.u_correct) hist.count_correct[bin_of(u)] += 1;
  for (double u : split.u_wrong) hist.count_wrong[bin_of(u)] += 1;
  hist.density_correct.assign(bins, 0.0);
  hist.density_wrong.assign(bins, 0.0);
  const double n_c = static_cast<double>(split.u_correct.size());
  const double n_w = static_cast<double>(split.u_wrong.size());
  for (int b = 0; b < bins; ++b) {
    if (n_c > 0) hist.density_correct[b] = hist.count_correct[b] / (n_c * width);
    if (n_w > 0) hist.density_wrong[b] = hist.count_wrong[b] / (n_w * width);
  }
  return hist;
}

}  // namespace

PretrainResult pretrain_source(const TrainConfig& config, const Dataset& source) {
  config.validate();
  const EncoderDims dims{config.scenario.input_dim, config.hidden_dim,
                         config.feature_dim};
  PretrainResult res;
  res.student =
      EncoderParams::scaled_uniform_init(mix_seed(config.scenario.seed, kInitTag), dims);

  const int n_ids = config.scenario.n_source_ids;
  const std::vector<std::vector<int>> groups = group_by_identity(source, n_ids);

  // Classifier warm start: unit class means under the initial encoder.
  Matrix classifier;
  {
    Matrix sums(n_ids, Vec(config.feature_dim, 0.0));
    std::vector<int> counts(n_ids, 0);
    for (const Sample& s : source.samples) {
      const Vec f = encoder_forward(res.student, s.input);
      for (int k = 0; k < config.feature_dim; ++k) sums[s.true_id][k] += f[k];
      counts[s.true_id] += 1;
    }
    for (int c = 0; c < n_ids; ++c) {
      if (counts[c] == 0) throw std::runtime_error("degenerate center");
      for (double& x : sums[c]) x /= counts[c];
    }
    classifier = normalized_rows(sums);
  }

  TrainerState state;
  state.student = res.student;
  AdamState cls_adam;
  for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    Xoshiro256 rng(mix_seed(config.scenario.seed, kPretrainTag, epoch));
    for (int iter = 0; iter < config.iters_per_epoch; ++iter) {
      const std::vector<int> positions =
          sample_pk(rng, groups, config.batch_p, config.batch_k);
      const BatchForward batch = forward_batch(state, source, positions, false);
      std::vector<int> labels;
      for (int pos : positions) labels.push_back(source.samples[pos].true_id);
      const LossOutput loss = source_id_loss(batch.ids, batch.student_features,
                                             labels, classifier, config.sigma);
      std::vector<double> grads(state.student.flat().size(), 0.0);
      backprop_batch(state, source, batch, loss.feature_grads, grads);
      adam_step(state.student.flat(), grads, state.encoder_adam, config.adam);
      matrix_adam_step(classifier, loss.center_grads, cls_adam, config.adam);
    }
  }
  res.student = state.student;
  res.class_centers = normalized_rows(classifier);

  int correct = 0;
  for (const Sample& s : source.samples) {
    const Vec f = encoder_forward(res.student, s.input);
    int best = 0;
    double best_sim = cosine_sim(f, res.class_centers[0]);
    for (int c = 1; c < n_ids; ++c) {
      const double sim = cosine_sim(f, res.class_centers[c]);
      if (sim > best_sim) {
        best_sim = sim;
        best = c;
      }
    }
    correct += (best == s.true_id);
  }
  res.source_accuracy =
      static_cast<double>(correct) / static_cast<double>(source.samples.size());
  return res;
}

ClusterRound clustering_stage(const EncoderParams& teacher, const Dataset& target,
                              const Matrix& source_class_centers,
                              const TrainConfig& config) {
  ClusterRound rd;
  rd.teacher_features.reserve(target.samples.size());
  for (const Sample& s : target.samples) {
    rd.teacher_features.push_back(encoder_forward(teacher, s.input));
  }
  rd.pseudo = dbscan(rd.teacher_features, config.dbscan_eps, config.dbscan_min_pts);
  if (rd.pseudo.n_clusters == 0) {
    throw DegenerateClusteringError(
        "degenerate clustering: every target sample is an outlier; increase "
        "dbscan_eps or decrease dbscan_min_pts");
  }
  rd.correctness = label_pseudo_correctness(target, rd.pseudo);
  int wrong = 0, right = 0;
  for (PseudoCorrectness c : rd.correctness) {
    if (c == PseudoCorrectness::kWrong) ++wrong;
    if (c == PseudoCorrectness::kCorrect) ++right;
    if (c == PseudoCorrectness::kOutlier) ++rd.n_outliers;
  }
  rd.wrong_label_rate =
      (wrong + right) > 0 ? static_cast<double>(wrong) / (wrong + right) : 0.0;

  switch (config.uncertainty_mode) {
    case UncertaintyMode::kFeatureConsistency:
      rd.has_refs = false;
      break;
    case UncertaintyMode::kTargetRefs:
      rd.refs = build_reference_bank(rd.pseudo.centers, {}, ReferenceMode::kTargetOnly);
      rd.has_refs = true;
      break;
    case UncertaintyMode::kSourceRefs:
      rd.refs =
          build_reference_bank({}, source_class_centers, ReferenceMode::kSourceOnly);
      rd.has_refs = true;
      break;
    case UncertaintyMode::kBothRefs:
      rd.refs = build_reference_bank(rd.pseudo.centers, source_class_centers,
                                     ReferenceMode::kBoth);
      rd.has_refs = true;
      break;
  }
  return rd;
}

EpochStats finetune_epoch(TrainerState& state, const ClusterRound& rd,
                          MemoryBank& bank, const Scenario& scenario,
                          const TrainConfig& config, int round_index,
                          int epoch_index) {
  const Dataset& target = scenario.target;
  const Dataset& source = scenario.source;

  std::vector<std::vector<int>> target_groups(rd.pseudo.n_clusters);
  for (std::size_t i = 0; i < target.samples.size(); ++i) {
    const int label = rd.pseudo.labels[i];
    if (label != kOutlierLabel) target_groups[label].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<int>> source_groups;
  if (config.source_on) {
    source_groups = group_by_identity(source, config.scenario.n_source_ids);
  }

  Xoshiro256 rng(mix_seed(config.scenario.seed, kFinetuneTag,
                          static_cast<std::uint64_t>(round_index),
                          static_cast<std::uint64_t>(epoch_index)));
  const bool need_u =
      (config.uid_on || config.utri_on || config.uct_on) && !config.force_zero_uncertainty;

  EpochStats stats;
  for (int iter = 0; iter < config.iters_per_epoch; ++iter) {
    const std::vector<int> positions =
        sample_pk(rng, target_groups, config.batch_p, config.batch_k);
    std::vector<int> src_positions;
    if (config.source_on) {
      src_positions = sample_pk(rng, source_groups, config.batch_p, config.batch_k);
    }

    const BatchForward batch = forward_batch(state, target, positions, true);
    const std::size_t n = positions.size();
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = rd.pseudo.labels[positions[i]];

    std::vector<double> u(n, 0.0);
    std::vector<Vec> du(n);
    if (need_u) {
      for (std::size_t i = 0; i < n; ++i) {
        UEstimate e = estimate_uncertainty(config, rd, batch.student_features[i],
                                           batch.teacher_features[i]);
        u[i] = e.u;
        du[i] = std::move(e.du_dstudent);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        du[i].assign(config.feature_dim, 0.0);
      }
    }
    const std::vector<double> zeros(n, 0.0);
    const std::vector<double>& u_tri = config.utri_on ? u : zeros;
    const std::vector<double>& u_ct = config.uct_on ? u : zeros;
    std::vector<double> omegas(n, 1.0);
    if (config.uid_on) {
      for (std::size_t i = 0; i < n; ++i) omegas[i] = std::exp(-u[i]);
    }

    const LossOutput id_term = id_loss(batch.ids, batch.student_features, labels,
                                       omegas, state.target_classifier, config.sigma);
    const std::vector<TripletIdx> triplets =
        batch_hard_triplets(batch.ids, batch.student_features, labels);
    const LossOutput tri_term =
        utri_loss(batch.ids, batch.student_features, u_tri, triplets);
    const LossOutput ct_term =
        config.ct_on ? uct_loss(batch.ids, batch.student_features, labels, u_ct, bank,
                                config.circle, true)
                     : LossOutput{};
    const LossOutput reg_term = need_u ? reg_loss(batch.ids, u, du) : LossOutput{};
    const LossOutput total =
        total_target_loss(id_term, tri_term, ct_term, reg_term, config.weights);

    BatchForward src_batch;
    LossOutput src_term;
    if (config.source_on) {
      src_batch = forward_batch(state, source, src_positions, false);
      std::vector<int> src_labels;
      for (int pos : src_positions) src_labels.push_back(source.samples[pos].true_id);
      src_term = source_id_loss(src_batch.ids, src_batch.student_features, src_labels,
                                state.source_classifier, config.sigma);
    }

    const std::uint64_t teacher_digest = bit_checksum(state.teacher.flat());

    std::vector<double> grads(state.student.flat().size(), 0.0);
    backprop_batch(state, target, batch, total.feature_grads, grads);
    if (config.source_on) {
      backprop_batch(state, source, src_batch, src_term.feature_grads, grads);
    }
    adam_step(state.student.flat(), grads, state.encoder_adam, config.adam);
    matrix_adam_step(state.target_classifier, total.center_grads, state.target_adam,
                     config.adam);
    if (config.source_on) {
      matrix_adam_step(state.source_classifier, src_term.center_grads,
                       state.source_adam, config.adam);
    }

    if (bit_checksum(state.teacher.flat()) != teacher_digest) {
      throw std::logic_error("teacher parameters changed outside ema_update");
    }
    if (config.mean_teacher_on) {
      ema_update(state.teacher, state.student, config.ema_alpha);
    } else {
      state.teacher = state.student;
    }

    if (config.ct_on) {
      bank.push_batch(batch.teacher_features, labels,
                      std::vector<double>(u_ct.begin(), u_ct.end()));
    }

    stats.mean_id += id_term.value;
    stats.mean_tri += tri_term.value;
    stats.mean_ct += ct_term.value;
    stats.mean_reg += reg_term.value;
    stats.mean_source_id += src_term.value;
    stats.mean_total += total.value;
  }
  const double inv_iters = 1.0 / config.iters_per_epoch;
  stats.mean_id *= inv_iters;
  stats.mean_tri *= inv_iters;
  stats.mean_ct *= inv_iters;
  stats.mean_reg *= inv_iters;
  stats.mean_source_id *= inv_iters;
  stats.mean_total *= inv_iters;

  const USplit split = uncertainty_split(state, rd, target, config);
  stats.mean_u_correct = mean_of(split.u_correct);
  stats.mean_u_wrong = mean_of(split.u_wrong);
  return stats;
}

namespace {

void split_query_gallery(const Dataset& target, std::vector<int>& query_pos,
                         std::vector<int>& gallery_pos) {
  std::map<int, std::vector<int>> by_identity;
  for (std::size_t i = 0; i < target.samples.size(); ++i) {
    by_identity[target.samples[i].true_id].push_back(static_cast<int>(i));
  }
  for (auto& [identity, positions] : by_identity) {
    std::sort(positions.begin(), positions.end(), [&](int a, int b) {
      return target.samples[a].sample_id < target.samples[b].sample_id;
    });
    for (std::size_t p = 0; p < positions.size(); ++p) {
      (p % 3 == 0 ? query_pos : gallery_pos).push_back(positions[p]);
    }
  }
}

}  // namespace

ExperimentResult run_experiment(const TrainConfig& config) {
  config.validate();
  const Scenario scenario = generate_scenario(config.scenario);

  ExperimentResult res;
  res.report.build = UNRN_BUILD_REVISION;
  res.report.config = config;

  PretrainResult pre = pretrain_source(config, scenario.source);
  res.report.pretrain_source_accuracy = pre.source_accuracy;

  TrainerState& state = res.state;
  state.student = std::move(pre.student);
  state.teacher = state.student;
  state.source_classifier = std::move(pre.class_centers);

  USplit last_split;
  for (int round = 0; round < config.rounds; ++round) {
    const ClusterRound rd = clustering_stage(
        state.teacher, scenario.target, normalized_rows(state.source_classifier), config);
    state.target_classifier = rd.pseudo.centers;
    state.target_adam = AdamState{};
    MemoryBank bank(config.resolved_bank_capacity(),
                    normalized_rows(state.source_classifier));

    RoundStats rs;
    rs.round = round;
    rs.n_clusters = rd.pseudo.n_clusters;
    rs.n_outliers = rd.n_outliers;
    rs.wrong_label_rate = rd.wrong_label_rate;
    for (int epoch = 0; epoch < config.epochs_per_round; ++epoch) {
      rs.epochs.push_back(
          finetune_epoch(state, rd, bank, scenario, config, round, epoch));
    }
    USplit split = uncertainty_split(state, rd, scenario.target, config);
    rs.mean_u_correct = mean_of(split.u_correct);
    rs.mean_u_wrong = mean_of(split.u_wrong);
    if (!split.u_correct.empty() && !split.u_wrong.empty()) {
      rs.auroc_wrong_vs_correct = auroc(split.u_correct, split.u_wrong);
    }
    rs.u_correct = split.u_correct;
    rs.u_wrong = split.u_wrong;
    last_split = std::move(split);
    res.report.rounds.push_back(std::move(rs));
  }

  std::vector<int> query_pos, gallery_pos;
  split_query_gallery(scenario.target, query_pos, gallery_pos);
  std::vector<Vec> query_features, gallery_features;
  std::vector<int> query_ids, gallery_ids;
  for (int pos : query_pos) {
    query_features.push_back(encoder_forward(state.teacher, scenario.target.samples[pos].input));
    query_ids.push_back(scenario.target.samples[pos].true_id);
  }
  for (int pos : gallery_pos) {
    gallery_features.push_back(
        encoder_forward(state.teacher, scenario.target.samples[pos].input));
    gallery_ids.push_back(scenario.target.samples[pos].true_id);
  }
  const RetrievalResult retrieval =
      evaluate_retrieval(query_features, query_ids, gallery_features, gallery_ids);
  res.report.map = retrieval.mean_ap;
  res.report.cmc = retrieval.cmc;
  res.report.histogram = build_histogram(last_split, config.hist_bins);
  return res;
}

std::vector<AblationRow> ablation_ladder_components() {
  auto set = [](bool src, bool ct, bool mt, bool uid, bool utri, bool uct) {
    return [=](TrainConfig& c) {
      c.source_on = src;
      c.ct_on = ct;
      c.mean_teacher_on = mt;
      c.uid_on = uid;
      c.utri_on = utri;
      c.uct_on = uct;
    };
  };
  return {
      {"baseline", set(false, false, false, false, false, false)},
      {"baseline_src", set(true, false, false, false, false, false)},
      {"baseline_src_ct", set(true, true, false, false, false, false)},
      {"sbase", set(true, true, true, false, false, false)},
      {"sbase_uid", set(true, true, true, true, false, false)},
      {"sbase_utri", set(true, true, true, false, true, false)},
      {"sbase_uid_utri", set(true, true, true, true, true, false)},
      {"unrn", set(true, true, true, true, true, true)},
  };
}

std::vector<AblationRow> ablation_ladder_uncertainty() {
  auto full = [](UncertaintyMode mode) {
    return [=](TrainConfig& c) {
      c.source_on = c.ct_on = c.mean_teacher_on = true;
      c.uid_on = c.utri_on = c.uct_on = true;
      c.uncertainty_mode = mode;
    };
  };
  return {
      {"sbase",
       [](TrainConfig& c) {
         c.source_on = c.ct_on = c.mean_teacher_on = true;
         c.uid_on = c.utri_on = c.uct_on = false;
       }},
      {"unrn_feat_consist", full(UncertaintyMode::kFeatureConsistency)},
      {"unrn_r_s", full(UncertaintyMode::kSourceRefs)},
      {"unrn_r_t", full(UncertaintyMode::kTargetRefs)},
      {"unrn_r", full(UncertaintyMode::kBothRefs)},
  };
}

std::vector<AblationRow> ablation_ladder_bank() {
  auto with_capacity = [](long long capacity) {
    return [=](TrainConfig& c) {
      c.source_on = c.ct_on = true;
      c.mean_teacher_on = false;
      c.uid_on = c.utri_on = c.uct_on = false;
      c.bank_capacity = capacity;
    };
  };
  return {
      {"bank_0", with_capacity(0)},
      {"bank_64", with_capacity(64)},
      {"bank_256", with_capacity(256)},
      {"bank_512", with_capacity(512)},
      {"bank_all", with_capacity(kBankCapacityAll)},
  };
}

std::vector<AblationCell> run_ablation(const TrainConfig& base,
                                       const std::vector<AblationRow>& ladder,
                                       const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  std::vector<AblationCell> cells;
  for (const AblationRow& row : ladder) {
    AblationCell mean_cell;
    mean_cell.row = row.name;
    mean_cell.seed_label = "mean";
    for (std::uint64_t seed : seeds) {
      TrainConfig config = base;
      row.apply(config);
      config.scenario.seed = seed;
      const ExperimentResult result = run_experiment(config);
      AblationCell cell;
      cell.row = row.name;
      cell.seed = seed;
      cell.seed_label = std::to_string(seed);
      cell.map = result.report.map;
      cell.cmc1 = result.report.cmc.at(1);
      cell.cmc5 = result.report.cmc.at(5);
      cell.cmc10 = result.report.cmc.at(10);
      if (!result.report.rounds.empty()) {
        const RoundStats& last = result.report.rounds.back();
        cell.wrong_label_rate = last.wrong_label_rate;
        cell.mean_u_correct = last.mean_u_correct;
        cell.mean_u_wrong = last.mean_u_wrong;
      }
      mean_cell.map += cell.map;
      mean_cell.cmc1 += cell.cmc1;
      mean_cell.cmc5 += cell.cmc5;
      mean_cell.cmc10 += cell.cmc10;
      mean_cell.wrong_label_rate += cell.wrong_label_rate;
      mean_cell.mean_u_correct += cell.mean_u_correct;
      mean_cell.mean_u_wrong += cell.mean_u_wrong;
      cells.push_back(std::move(cell));
    }
    const double inv = 1.0 / static_cast<double>(seeds.size());
    mean_cell.map *= inv;
    mean_cell.cmc1 *= inv;
    mean_cell.cmc5 *= inv;
    mean_cell.cmc10 *= inv;
    mean_cell.wrong_label_rate *= inv;
    mean_cell.mean_u_correct *= inv;
    mean_cell.mean_u_wrong *= inv;
    cells.push_back(std::move(mean_cell));
  }
  return cells;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string ablation_to_csv(const std::vector<AblationCell>& cells) {
  std::ostringstream out;
  out << "row,seed,mAP,cmc1,cmc5,cmc10,wrong_label_rate,mean_u_correct,mean_u_wrong\n";
  for (const AblationCell& c : cells) {
    out << c.row << ',' << c.seed_label << ',' << format_double(c.map) << ','
        << format_double(c.cmc1) << ',' << format_double(c.cmc5) << ','
        << format_double(c.cmc10) << ',' << format_double(c.wrong_label_rate) << ','
        << format_double(c.mean_u_correct) << ',' << format_double(c.mean_u_wrong)
        << "\n";
  }
  return out.str();
}

namespace {

json config_to_json(const TrainConfig& c) {
  json j;
  j["n_source_ids"] = c.scenario.n_source_ids;
  j["n_target_ids"] = c.scenario.n_target_ids;
  j["samples_per_id"] = c.scenario.samples_per_id;
  j["input_dim"] = c.scenario.input_dim;
  j["intra_class_spread"] = c.scenario.intra_class_spread;
  j["domain_shift"] = c.scenario.domain_shift;
  j["noise_boost_fraction"] = c.scenario.noise_boost_fraction;
  j["seed"] = c.scenario.seed;
  j["hidden_dim"] = c.hidden_dim;
  j["feature_dim"] = c.feature_dim;
  j["lr"] = c.adam.lr;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["adam_eps"] = c.adam.eps;
  j["dbscan_eps"] = c.dbscan_eps;
  j["dbscan_min_pts"] = c.dbscan_min_pts;
  j["ema_alpha"] = c.ema_alpha;
  j["lambda_tri"] = c.weights.lambda_tri;
  j["lambda_ct"] = c.weights.lambda_ct;
  j["lambda_reg"] = c.weights.lambda_reg;
  j["sigma"] = c.sigma;
  j["circle_margin"] = c.circle.margin;
  j["circle_gamma"] = c.circle.gamma;
  j["circle_self_paced"] = c.circle.self_paced;
  j["softmax_temperature"] = c.softmax_temperature;
  j["bank_capacity"] = c.bank_capacity;
  j["uncertainty_mode"] = to_string(c.uncertainty_mode);
  j["source_on"] = c.source_on;
  j["ct_on"] = c.ct_on;
  j["mean_teacher_on"] = c.mean_teacher_on;
  j["uid_on"] = c.uid_on;
  j["utri_on"] = c.utri_on;
  j["uct_on"] = c.uct_on;
  j["force_zero_uncertainty"] = c.force_zero_uncertainty;
  j["pretrain_epochs"] = c.pretrain_epochs;
  j["rounds"] = c.rounds;
  j["epochs_per_round"] = c.epochs_per_round;
  j["iters_per_epoch"] = c.iters_per_epoch;
  j["batch_p"] = c.batch_p;
  j["batch_k"] = c.batch_k;
  j["hist_bins"] = c.hist_bins;
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.scenario.n_source_ids = j.at("n_source_ids").get<int>();
  c.scenario.n_target_ids = j.at("n_target_ids").get<int>();
  c.scenario.samples_per_id = j.at("samples_per_id").get<int>();
  c.scenario.input_dim = j.at("input_dim").get<int>();
  c.scenario.intra_class_spread = j.at("intra_class_spread").get<double>();
  c.scenario.domain_shift = j.at("domain_shift").get<double>();
  c.scenario.noise_boost_fraction = j.at("noise_boost_fraction").get<double>();
  c.scenario.seed = j.at("seed").get<std::uint64_t>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.feature_dim = j.at("feature_dim").get<int>();
  c.adam.lr = j.at("lr").get<double>();
  c.adam.beta1 = j.at("beta1").get<double>();
  c.adam.beta2 = j.at("beta2").get<double>();
  c.adam.eps = j.at("adam_eps").get<double>();
  c.dbscan_eps = j.at("dbscan_eps").get<double>();
  c.dbscan_min_pts = j.at("dbscan_min_pts").get<int>();
  c.ema_alpha = j.at("ema_alpha").get<double>();
  c.weights.lambda_tri = j.at("lambda_tri").get<double>();
  c.weights.lambda_ct = j.at("lambda_ct").get<double>();
  c.weights.lambda_reg = j.at("lambda_reg").get<double>();
  c.sigma = j.at("sigma").get<double>();
  c.circle.margin = j.at("circle_margin").get<double>();
  c.circle.gamma = j.at("circle_gamma").get<double>();
  c.circle.self_paced = j.at("circle_self_paced").get<bool>();
  c.softmax_temperature = j.at("softmax_temperature").get<double>();
  c.bank_capacity = j.at("bank_capacity").get<long long>();
  c.uncertainty_mode = uncertainty_mode_from_string(j.at("uncertainty_mode").get<std::string>());
  c.source_on = j.at("source_on").get<bool>();
  c.ct_on = j.at("ct_on").get<bool>();
  c.mean_teacher_on = j.at("mean_teacher_on").get<bool>();
  c.uid_on = j.at("uid_on").get<bool>();
  c.utri_on = j.at("utri_on").get<bool>();
  c.uct_on = j.at("uct_on").get<bool>();
  c.force_zero_uncertainty = j.at("force_zero_uncertainty").get<bool>();
  c.pretrain_epochs = j.at("pretrain_epochs").get<int>();
  c.rounds = j.at("rounds").get<int>();
  c.epochs_per_round = j.at("epochs_per_round").get<int>();
  c.iters_per_epoch = j.at("iters_per_epoch").get<int>();
  c.batch_p = j.at("batch_p").get<int>();
  c.batch_k = j.at("batch_k").get<int>();
  c.hist_bins = j.at("hist_bins").get<int>();
  return c;
}

json histogram_to_json(const UncertaintyHistogram& h) {
  json j;
  j["bin_edges"] = h.bin_edges;
  j["count_correct"] = h.count_correct;
  j["count_wrong"] = h.count_wrong;
  j["density_correct"] = h.density_correct;
  j["density_wrong"] = h.density_wrong;
  return j;
}

json encoder_to_json(const EncoderParams& p) {
  json j;
  j["input"] = p.dims().input;
  j["hidden"] = p.dims().hidden;
  j["output"] = p.dims().output;
  j["data"] = p.flat();
  return j;
}

EncoderParams encoder_from_json(const json& j) {
  const EncoderDims dims{j.at("input").get<int>(), j.at("hidden").get<int>(),
                         j.at("output").get<int>()};
  EncoderParams p(dims);
  const std::vector<double> data = j.at("data").get<std::vector<double>>();
  if (data.size() != p.flat().size()) {
    throw std::invalid_argument("checkpoint parameter count mismatch");
  }
  p.flat() = data;
  return p;
}

}  // namespace

std::string report_to_json(const Report& report) {
  json j;
  j["build"] = report.build;
  j["config"] = config_to_json(report.config);
  j["pretrain"]["source_accuracy"] = report.pretrain_source_accuracy;
  j["rounds"] = json::array();
  for (const RoundStats& rs : report.rounds) {
    json r;
    r["round"] = rs.round;
    r["n_clusters"] = rs.n_clusters;
    r["n_outliers"] = rs.n_outliers;
    r["wrong_label_rate"] = rs.wrong_label_rate;
    r["epochs"] = json::array();
    for (const EpochStats& es : rs.epochs) {
      json e;
      e["mean_id"] = es.mean_id;
      e["mean_tri"] = es.mean_tri;
      e["mean_ct"] = es.mean_ct;
      e["mean_reg"] = es.mean_reg;
      e["mean_source_id"] = es.mean_source_id;
      e["mean_total"] = es.mean_total;
      e["mean_u_correct"] = es.mean_u_correct;
      e["mean_u_wrong"] = es.mean_u_wrong;
      r["epochs"].push_back(e);
    }
    r["n_correct"] = rs.u_correct.size();
    r["n_wrong"] = rs.u_wrong.size();
    r["mean_u_correct"] = rs.mean_u_correct;
    r["mean_u_wrong"] = rs.mean_u_wrong;
    if (rs.auroc_wrong_vs_correct) {
      r["auroc_wrong_vs_correct"] = *rs.auroc_wrong_vs_correct;
    } else {
      r["auroc_wrong_vs_correct"] = nullptr;
    }
    j["rounds"].push_back(r);
  }
  j["evaluation"]["map"] = report.map;
  for (const auto& [k, rate] : report.cmc) {
    j["evaluation"]["cmc"][std::to_string(k)] = rate;
  }
  j["histogram"] = histogram_to_json(report.histogram);
  return j.dump(2) + "\n";
}

std::string config_to_json_string(const TrainConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

TrainConfig config_from_json_string(const std::string& text) {
  return config_from_json(json::parse(text));
}

std::string checkpoint_to_json(const TrainConfig& config, const TrainerState& state) {
  json j;
  j["config"] = config_to_json(config);
  j["student"] = encoder_to_json(state.student);
  j["teacher"] = encoder_to_json(state.teacher);
  j["source_classifier"] = state.source_classifier;
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  const json j = json::parse(text);
  Checkpoint cp;
  cp.config = config_from_json(j.at("config"));
  cp.state.student = encoder_from_json(j.at("student"));
  cp.state.teacher = encoder_from_json(j.at("teacher"));
  cp.state.source_classifier = j.at("source_classifier").get<Matrix>();
  return cp;
}

UncertaintyHistogram histogram_from_checkpoint(const Checkpoint& checkpoint) {
  checkpoint.config.validate();
  const Scenario scenario = generate_scenario(checkpoint.config.scenario);
  const ClusterRound rd =
      clustering_stage(checkpoint.state.teacher, scenario.target,
                       normalized_rows(checkpoint.state.source_classifier),
                       checkpoint.config);
  const USplit split =
      uncertainty_split(checkpoint.state, rd, scenario.target, checkpoint.config);
  return build_histogram(split, checkpoint.config.hist_bins);
}

std::string histogram_to_csv(const UncertaintyHistogram& hist) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,count_correct,count_wrong,density_correct,density_wrong\n";
  const std::size_t bins = hist.count_correct.size();
  for (std::size_t b = 0; b < bins; ++b) {
    out << format_double(hist.bin_edges[b]) << ',' << format_double(hist.bin_edges[b + 1])
        << ',' << hist.count_correct[b] << ',' << hist.count_wrong[b] << ','
        << format_double(hist.density_correct[b]) << ','
        << format_double(hist.density_wrong[b]) << "\n";
  }
  return out.str();
}

}  // namespace unrn
