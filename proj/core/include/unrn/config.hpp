#pragma once

#include <stdexcept>
#include <string>

#include "unrn/encoder.hpp"
#include "unrn/losses.hpp"
#include "unrn/synth_data.hpp"

namespace unrn {

// Invalid configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Which disagreement signal drives the per-sample uncertainty.
enum class UncertaintyMode {
  kFeatureConsistency,  // 1 - cos(student, teacher), no reference bank
  kTargetRefs,          // soft multilabels against target cluster centers
  kSourceRefs,          // against source class centers
  kBothRefs,            // against both, stacked target-first
};

UncertaintyMode uncertainty_mode_from_string(const std::string& name);
std::string to_string(UncertaintyMode mode);

// Bank capacity sentinel: use every target sample.
inline constexpr long long kBankCapacityAll = -1;

struct TrainConfig {
  ScenarioConfig scenario;

  int hidden_dim = 32;
  int feature_dim = 16;

  AdamConfig adam;

  // eps is calibrated for cosine distance between 16-dim unit features; the
  // teacher features this clustering sees concentrate same-identity pairs
  // well under 0.15 after source pretraining.
  double dbscan_eps = 0.15;
  int dbscan_min_pts = 4;

  // 0.99 keeps the teacher within reach of the student over a 50-iteration
  // round; at 0.999 it would stay pinned to the pretrain weights here.
  double ema_alpha = 0.99;

  LossWeights weights;
  double sigma = 16.0;  // cosine classifier scale
  CircleParams circle;
  // Sharp multilabels: cosine scores only span [-1, 1], so at temperature 1
  // the teacher/student KL sits near zero and the credibility weights never
  // differentiate. 0.05 spreads u over roughly [0, 0.5].
  double softmax_temperature = 0.05;

  long long bank_capacity = 512;  // kBankCapacityAll uses the target size

  UncertaintyMode uncertainty_mode = UncertaintyMode::kBothRefs;

  // Component toggles. ct_on adds the contrastive term at all; uid/utri/uct
  // switch the uncertainty weighting of the respective term (off means the
  // plain counterpart with u = 0). force_zero_uncertainty zeroes u even with
  // the weighting on.
  bool source_on = true;
  bool ct_on = true;
  bool mean_teacher_on = true;
  bool uid_on = true;
  bool utri_on = true;
  bool uct_on = true;
  bool force_zero_uncertainty = false;

  int pretrain_epochs = 6;
  int rounds = 3;
  int epochs_per_round = 1;
  int iters_per_epoch = 50;
  int batch_p = 4;
  int batch_k = 4;

  int hist_bins = 20;

  void validate() const;  // throws ConfigError

  // Resolves kBankCapacityAll against the configured target size.
  std::size_t resolved_bank_capacity() const;
};

}  // namespace unrn
