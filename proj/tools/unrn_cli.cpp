#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "unrn/pipeline.hpp"

namespace {

// TrainConfig plus the string-typed fields CLI11 parses before conversion.
struct CliConfig {
  unrn::TrainConfig cfg;
  std::string mode = "r";
  std::string config_file;
};

void add_config_options(CLI::App* cmd, CliConfig& c) {
  cmd->option_defaults()->always_capture_default();
  unrn::TrainConfig& cfg = c.cfg;
  cmd->add_option("--n_source_ids", cfg.scenario.n_source_ids, "Source identities");
  cmd->add_option("--n_target_ids", cfg.scenario.n_target_ids, "Target identities");
  cmd->add_option("--samples_per_id", cfg.scenario.samples_per_id, "Samples per identity");
  cmd->add_option("--input_dim", cfg.scenario.input_dim, "Input dimensionality");
  cmd->add_option("--intra_class_spread", cfg.scenario.intra_class_spread,
                  "Gaussian spread around each identity prototype");
  cmd->add_option("--domain_shift", cfg.scenario.domain_shift,
                  "Affine shift+rotation magnitude applied to target samples");
  cmd->add_option("--noise_boost_fraction", cfg.scenario.noise_boost_fraction,
                  "Fraction of target identities with tripled spread");
  cmd->add_option("--seed", cfg.scenario.seed, "Master seed");
  cmd->add_option("--hidden_dim", cfg.hidden_dim, "Encoder hidden width");
  cmd->add_option("--feature_dim", cfg.feature_dim, "Embedding dimensionality");
  cmd->add_option("--lr", cfg.adam.lr, "ADAM learning rate");
  cmd->add_option("--beta1", cfg.adam.beta1, "ADAM beta1");
  cmd->add_option("--beta2", cfg.adam.beta2, "ADAM beta2");
  cmd->add_option("--adam_eps", cfg.adam.eps, "ADAM epsilon");
  cmd->add_option("--dbscan_eps", cfg.dbscan_eps, "Cosine-distance neighborhood radius");
  cmd->add_option("--dbscan_min_pts", cfg.dbscan_min_pts,
                  "Neighbors (incl. self) needed for a core point");
  cmd->add_option("--ema_alpha", cfg.ema_alpha, "Teacher EMA decay");
  cmd->add_option("--lambda_tri", cfg.weights.lambda_tri, "Triplet loss weight");
  cmd->add_option("--lambda_ct", cfg.weights.lambda_ct, "Contrastive loss weight");
  cmd->add_option("--lambda_reg", cfg.weights.lambda_reg, "Uncertainty regularizer weight");
  cmd->add_option("--sigma", cfg.sigma, "Cosine classifier scale");
  cmd->add_option("--circle_margin", cfg.circle.margin, "Self-paced weighting margin");
  cmd->add_option("--circle_gamma", cfg.circle.gamma, "Self-paced weighting scale");
  cmd->add_option("--circle_self_paced", cfg.circle.self_paced,
                  "Re-weight pair similarities (false: raw cosines)");
  cmd->add_option("--softmax_temperature", cfg.softmax_temperature,
                  "Soft multilabel temperature");
  cmd->add_option("--bank_capacity", cfg.bank_capacity,
                  "Memory bank capacity (-1: all target samples)");
  cmd->add_option("--uncertainty_mode", c.mode, "feat_consist, r_t, r_s or r");
  cmd->add_option("--source_on", cfg.source_on, "Joint source ID loss");
  cmd->add_option("--ct_on", cfg.ct_on, "Contrastive term");
  cmd->add_option("--mean_teacher_on", cfg.mean_teacher_on, "EMA teacher");
  cmd->add_option("--uid_on", cfg.uid_on, "Uncertainty weights on ID loss");
  cmd->add_option("--utri_on", cfg.utri_on, "Uncertainty weights on triplet loss");
  cmd->add_option("--uct_on", cfg.uct_on, "Uncertainty weights on contrastive loss");
  cmd->add_option("--force_zero_uncertainty", cfg.force_zero_uncertainty,
                  "Zero every u in the losses (diagnostics unaffected)");
  cmd->add_option("--pretrain_epochs", cfg.pretrain_epochs, "Source pretrain epochs");
  cmd->add_option("--rounds", cfg.rounds, "Cluster/fine-tune rounds");
  cmd->add_option("--epochs_per_round", cfg.epochs_per_round, "Fine-tune epochs per round");
  cmd->add_option("--iters_per_epoch", cfg.iters_per_epoch, "Batches per epoch");
  cmd->add_option("--batch_p", cfg.batch_p, "Identities per batch");
  cmd->add_option("--batch_k", cfg.batch_k, "Instances per identity");
  cmd->add_option("--hist_bins", cfg.hist_bins, "Uncertainty histogram bins");
  cmd->add_option("--config", c.config_file, "Key=value config file; flags override it");
}

std::string trimmed(const std::string& s) {
  const std::size_t first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const std::size_t last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Applies a key=value file to the subcommand's options. Keys mirror the long
// flags; options already given on the command line keep their values. Blank
// lines and lines starting with # or ; are ignored, later duplicates win.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw unrn::ConfigError("cannot open config file: " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trimmed(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos || trimmed(stripped.substr(0, eq)).empty()) {
      throw unrn::ConfigError("config file line " + std::to_string(line_no) +
                              " is not key=value: " + stripped);
    }
    std::string value = trimmed(stripped.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    entries[trimmed(stripped.substr(0, eq))] = value;
  }
  for (const auto& [key, value] : entries) {
    if (key == "config") {
      throw unrn::ConfigError("config file cannot nest another config file");
    }
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr) throw unrn::ConfigError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error&) {
      throw unrn::ConfigError("invalid value '" + value + "' for config key '" +
                              key + "'");
    }
  }
}

unrn::TrainConfig finalize(CliConfig& c) {
  c.cfg.uncertainty_mode = unrn::uncertainty_mode_from_string(c.mode);
  c.cfg.validate();
  return c.cfg;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void print_report_summary(const unrn::Report& report) {
  std::printf("pretrain source accuracy: %.4f\n", report.pretrain_source_accuracy);
  for (const unrn::RoundStats& rs : report.rounds) {
    std::printf(
        "round %d: clusters=%d outliers=%d wrong_rate=%.4f u_correct=%.5f "
        "u_wrong=%.5f auroc=%s\n",
        rs.round, rs.n_clusters, rs.n_outliers, rs.wrong_label_rate,
        rs.mean_u_correct, rs.mean_u_wrong,
        rs.auroc_wrong_vs_correct
            ? (std::ostringstream{} << *rs.auroc_wrong_vs_correct).str().c_str()
            : "n/a");
  }
  std::printf("mAP=%.4f", report.map);
  for (const auto& [k, rate] : report.cmc) std::printf(" cmc%d=%.4f", k, rate);
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncertainty-guided noise resilient training on synthetic domain shifts"};
  app.require_subcommand(1);

  CLI::App* generate = app.add_subcommand("generate", "Write the scenario as CSV");
  CliConfig gen_cfg;
  std::string source_out = "source.csv";
  std::string target_out = "target.csv";
  add_config_options(generate, gen_cfg);
  generate->add_option("--source_out", source_out, "Source CSV path")
      ->capture_default_str();
  generate->add_option("--target_out", target_out, "Target CSV path")
      ->capture_default_str();

  CLI::App* train = app.add_subcommand("train", "Run the full experiment");
  CliConfig train_cfg;
  std::string report_out = "report.json";
  std::string checkpoint_out;
  bool quiet = false;
  add_config_options(train, train_cfg);
  train->add_option("--report", report_out, "Report JSON path")->capture_default_str();
  train->add_option("--checkpoint", checkpoint_out,
                    "Also write the final models as a checkpoint JSON");
  train->add_flag("--quiet", quiet, "Suppress the stdout summary");

  CLI::App* ablate = app.add_subcommand("ablate", "Run an ablation ladder");
  CliConfig ablate_cfg;
  std::string table = "components";
  int n_seeds = 3;
  std::uint64_t base_seed = 1;
  std::string ablation_out = "ablation.csv";
  add_config_options(ablate, ablate_cfg);
  ablate->add_option("--table", table, "components, uncertainty or bank")
      ->capture_default_str()
      ->check(CLI::IsMember({"components", "uncertainty", "bank"}));
  ablate->add_option("--seeds", n_seeds, "Number of seeds")->capture_default_str();
  ablate->add_option("--base_seed", base_seed, "First seed")->capture_default_str();
  ablate->add_option("--out", ablation_out, "Ablation CSV path")->capture_default_str();

  CLI::App* hist = app.add_subcommand(
      "hist", "Uncertainty histogram split by pseudo-label correctness");
  std::string hist_checkpoint;
  std::string hist_out = "hist.csv";
  hist->add_option("--checkpoint", hist_checkpoint, "Checkpoint JSON from train")
      ->required();
  hist->add_option("--out", hist_out, "Histogram CSV path")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (generate->parsed()) {
      if (!gen_cfg.config_file.empty()) apply_config_file(generate, gen_cfg.config_file);
      const unrn::TrainConfig cfg = finalize(gen_cfg);
      const unrn::Scenario scenario = unrn::generate_scenario(cfg.scenario);
      std::ofstream src(source_out, std::ios::binary);
      std::ofstream tgt(target_out, std::ios::binary);
      if (!src || !tgt) throw std::runtime_error("cannot open output file");
      unrn::write_dataset_csv(src, scenario.source);
      unrn::write_dataset_csv(tgt, scenario.target);
      std::printf("wrote %s (%zu samples) and %s (%zu samples)\n", source_out.c_str(),
                  scenario.source.samples.size(), target_out.c_str(),
                  scenario.target.samples.size());
    } else if (train->parsed()) {
      if (!train_cfg.config_file.empty()) apply_config_file(train, train_cfg.config_file);
      const unrn::TrainConfig cfg = finalize(train_cfg);
      const unrn::ExperimentResult result = unrn::run_experiment(cfg);
      write_file(report_out, unrn::report_to_json(result.report));
      if (!checkpoint_out.empty()) {
        write_file(checkpoint_out, unrn::checkpoint_to_json(cfg, result.state));
      }
      if (!quiet) print_report_summary(result.report);
    } else if (ablate->parsed()) {
      if (!ablate_cfg.config_file.empty()) apply_config_file(ablate, ablate_cfg.config_file);
      const unrn::TrainConfig cfg = finalize(ablate_cfg);
      if (n_seeds < 1) throw unrn::ConfigError("seeds must be at least 1");
      std::vector<unrn::AblationRow> ladder;
      if (table == "components") ladder = unrn::ablation_ladder_components();
      if (table == "uncertainty") ladder = unrn::ablation_ladder_uncertainty();
      if (table == "bank") ladder = unrn::ablation_ladder_bank();
      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < n_seeds; ++i) seeds.push_back(base_seed + i);
      const std::vector<unrn::AblationCell> cells =
          unrn::run_ablation(cfg, ladder, seeds);
      write_file(ablation_out, unrn::ablation_to_csv(cells));
      std::printf("wrote %s (%zu cells)\n", ablation_out.c_str(), cells.size());
    } else if (hist->parsed()) {
      const unrn::Checkpoint cp = unrn::checkpoint_from_json(read_file(hist_checkpoint));
      const unrn::UncertaintyHistogram histogram = unrn::histogram_from_checkpoint(cp);
      write_file(hist_out, unrn::histogram_to_csv(histogram));
      std::printf("wrote %s\n", hist_out.c_str());
    }
  } catch (const unrn::DegenerateClusteringError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const unrn::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
