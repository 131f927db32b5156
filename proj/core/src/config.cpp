#include "unrn/config.hpp"

namespace unrn {

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}
}  // namespace

void ScenarioConfig::validate() const {
  require(n_source_ids >= 1, "n_source_ids must be at least 1");
  require(n_target_ids >= 1, "n_target_ids must be at least 1");
  require(samples_per_id >= 1, "samples_per_id must be at least 1");
  require(input_dim >= 2, "input_dim must be at least 2");
  require(intra_class_spread > 0.0, "intra_class_spread must be positive");
  require(domain_shift >= 0.0, "domain_shift must be nonnegative");
  require(noise_boost_fraction >= 0.0 && noise_boost_fraction <= 1.0,
          "noise_boost_fraction must lie in [0, 1]");
}

UncertaintyMode uncertainty_mode_from_string(const std::string& name) {
  if (name == "feat_consist") return UncertaintyMode::kFeatureConsistency;
  if (name == "r_t") return UncertaintyMode::kTargetRefs;
  if (name == "r_s") return UncertaintyMode::kSourceRefs;
  if (name == "r") return UncertaintyMode::kBothRefs;
  throw ConfigError("unknown uncertainty_mode '" + name +
                    "' (expected feat_consist, r_t, r_s or r)");
}

std::string to_string(UncertaintyMode mode) {
  switch (mode) {
    case UncertaintyMode::kFeatureConsistency: return "feat_consist";
    case UncertaintyMode::kTargetRefs: return "r_t";
    case UncertaintyMode::kSourceRefs: return "r_s";
    case UncertaintyMode::kBothRefs: return "r";
  }
  throw ConfigError("invalid uncertainty mode value");
}

void TrainConfig::validate() const {
  scenario.validate();
  require(hidden_dim >= 1, "hidden_dim must be at least 1");
  require(feature_dim >= 2, "feature_dim must be at least 2");
  require(adam.lr > 0.0, "lr must be positive");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0, "beta1 must lie in [0, 1)");
  require(adam.beta2 >= 0.0 && adam.beta2 < 1.0, "beta2 must lie in [0, 1)");
  require(adam.eps > 0.0, "adam_eps must be positive");
  require(dbscan_eps > 0.0, "dbscan_eps must be positive");
  require(dbscan_min_pts >= 1, "dbscan_min_pts must be at least 1");
  require(ema_alpha >= 0.0 && ema_alpha <= 1.0, "ema_alpha must lie in [0, 1]");
  require(weights.lambda_tri >= 0.0, "lambda_tri must be nonnegative");
  require(weights.lambda_ct >= 0.0, "lambda_ct must be nonnegative");
  require(weights.lambda_reg >= 0.0, "lambda_reg must be nonnegative");
  require(sigma > 0.0, "sigma must be positive");
  require(circle.margin > 0.0 && circle.margin < 1.0, "circle_margin must lie in (0, 1)");
  require(circle.gamma > 0.0, "circle_gamma must be positive");
  require(softmax_temperature > 0.0, "softmax_temperature must be positive");
  require(bank_capacity >= kBankCapacityAll, "bank_capacity must be >= -1");
  require(pretrain_epochs >= 0, "pretrain_epochs must be nonnegative");
  require(rounds >= 0, "rounds must be nonnegative");
  require(epochs_per_round >= 1, "epochs_per_round must be at least 1");
  require(iters_per_epoch >= 1, "iters_per_epoch must be at least 1");
  require(batch_p >= 2, "batch_p must be at least 2");
  require(batch_k >= 2, "batch_k must be at least 2");
  require(hist_bins >= 1, "hist_bins must be at least 1");
}

std::size_t TrainConfig::resolved_bank_capacity() const {
  if (bank_capacity == kBankCapacityAll) {
    return static_cast<std::size_t>(scenario.n_target_ids) *
           static_cast<std::size_t>(scenario.samples_per_id);
  }
  return static_cast<std::size_t>(bank_capacity);
}

}  // namespace unrn
