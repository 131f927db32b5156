#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "unrn/clustering.hpp"
#include "unrn/config.hpp"
#include "unrn/encoder.hpp"
#include "unrn/memory_bank.hpp"
#include "unrn/metrics.hpp"
#include "unrn/synth_data.hpp"
#include "unrn/uncertainty.hpp"

namespace unrn {

// All target samples became outliers (CLI exit code 3).
struct DegenerateClusteringError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PretrainResult {
  EncoderParams student;
  Matrix class_centers;          // unit rows, one per source identity
  double source_accuracy = 0.0;  // nearest-center accuracy on the source set
};

// Supervised warm-up on the labeled source domain: encoder plus cosine
// classifier under source_id_loss. 0 epochs returns the initialization.
PretrainResult pretrain_source(const TrainConfig& config, const Dataset& source);

struct ClusterRound {
  PseudoLabeledSet pseudo;
  std::vector<PseudoCorrectness> correctness;
  ReferenceBank refs;     // empty and unused in feature-consistency mode
  bool has_refs = false;
  std::vector<Vec> teacher_features;  // one per target sample
  double wrong_label_rate = 0.0;      // wrong / (wrong + correct)
  int n_outliers = 0;
};

// Encodes every target sample with the teacher, clusters, and prepares the
// round's reference bank. Throws DegenerateClusteringError when everything
// is an outlier.
ClusterRound clustering_stage(const EncoderParams& teacher, const Dataset& target,
                              const Matrix& source_class_centers,
                              const TrainConfig& config);

struct TrainerState {
  EncoderParams student;
  EncoderParams teacher;
  AdamState encoder_adam;
  Matrix source_classifier;  // rows trained jointly during fine-tuning
  AdamState source_adam;
  Matrix target_classifier;  // fresh copy of cluster centers each round
  AdamState target_adam;
};

struct EpochStats {
  double mean_id = 0.0;
  double mean_tri = 0.0;
  double mean_ct = 0.0;
  double mean_reg = 0.0;
  double mean_source_id = 0.0;
  double mean_total = 0.0;  // target total; source term excluded
  double mean_u_correct = 0.0;
  double mean_u_wrong = 0.0;
};

// One pass of iters_per_epoch PK-batch steps: forward both models, compute
// per-sample uncertainty, apply the toggled losses, ADAM, EMA, bank push.
EpochStats finetune_epoch(TrainerState& state, const ClusterRound& round_data,
                          MemoryBank& bank, const Scenario& scenario,
                          const TrainConfig& config, int round_index,
                          int epoch_index);

struct RoundStats {
  int round = 0;
  int n_clusters = 0;
  int n_outliers = 0;
  double wrong_label_rate = 0.0;
  std::vector<EpochStats> epochs;
  // End-of-round uncertainty split over all clustered target samples.
  std::vector<double> u_correct;
  std::vector<double> u_wrong;
  double mean_u_correct = 0.0;
  double mean_u_wrong = 0.0;
  std::optional<double> auroc_wrong_vs_correct;  // absent when a side is empty
};

struct UncertaintyHistogram {
  std::vector<double> bin_edges;  // hist_bins + 1 ascending edges from 0
  std::vector<long long> count_correct;
  std::vector<long long> count_wrong;
  std::vector<double> density_correct;  // per-class normalized densities
  std::vector<double> density_wrong;
};

struct Report {
  std::string build;
  TrainConfig config;
  double pretrain_source_accuracy = 0.0;
  std::vector<RoundStats> rounds;
  double map = 0.0;
  std::map<int, double> cmc;
  UncertaintyHistogram histogram;  // from the final round's split
};

struct ExperimentResult {
  Report report;
  TrainerState state;  // final models, for checkpointing
};

// pretrain, then rounds of {cluster, finetune}, then query/gallery retrieval
// evaluation. Fully deterministic per config.
ExperimentResult run_experiment(const TrainConfig& config);

struct AblationRow {
  std::string name;
  std::function<void(TrainConfig&)> apply;
};

// The component ladder (baseline through full uncertainty weighting).
std::vector<AblationRow> ablation_ladder_components();
// Uncertainty-design variants (feature consistency, R_s, R_t, both).
std::vector<AblationRow> ablation_ladder_uncertainty();
// Memory capacities in ascending order, 0 through all samples.
std::vector<AblationRow> ablation_ladder_bank();

struct AblationCell {
  std::string row;
  std::uint64_t seed = 0;  // per-seed cells; the mean rows use seed_label
  std::string seed_label;
  double map = 0.0;
  double cmc1 = 0.0;
  double cmc5 = 0.0;
  double cmc10 = 0.0;
  double wrong_label_rate = 0.0;
  double mean_u_correct = 0.0;
  double mean_u_wrong = 0.0;
};

// Runs every (row, seed) cell and appends one mean row per ladder row.
std::vector<AblationCell> run_ablation(const TrainConfig& base,
                                       const std::vector<AblationRow>& ladder,
                                       const std::vector<std::uint64_t>& seeds);

// header: row,seed,mAP,cmc1,cmc5,cmc10,wrong_label_rate,mean_u_correct,mean_u_wrong
std::string ablation_to_csv(const std::vector<AblationCell>& cells);

// Deterministic serializations; no timestamps anywhere.
std::string report_to_json(const Report& report);
std::string config_to_json_string(const TrainConfig& config);
TrainConfig config_from_json_string(const std::string& text);
std::string checkpoint_to_json(const TrainConfig& config, const TrainerState& state);
struct Checkpoint {
  TrainConfig config;
  TrainerState state;
};
Checkpoint checkpoint_from_json(const std::string& text);

// Re-clusters with the checkpoint teacher and splits current uncertainties
// by pseudo-label correctness.
UncertaintyHistogram histogram_from_checkpoint(const Checkpoint& checkpoint);
// header: bin_lo,bin_hi,count_correct,count_wrong,density_correct,density_wrong
std::string histogram_to_csv(const UncertaintyHistogram& hist);

}  // namespace unrn
