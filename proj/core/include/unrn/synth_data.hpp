#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "unrn/clustering.hpp"
#include "unrn/numerics.hpp"

namespace unrn {

struct ScenarioConfig {
  int n_source_ids = 15;
  int n_target_ids = 20;
  int samples_per_id = 30;
  int input_dim = 16;
  double intra_class_spread = 0.13;
  double domain_shift = 0.3;
  // Fraction of target identities whose spread is tripled; they are the
  // lowest identity ids, count rounded to nearest.
  double noise_boost_fraction = 0.3;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

enum class Domain { kSource, kTarget };

struct Sample {
  int sample_id = 0;  // identity * samples_per_id + index, per domain
  Domain domain = Domain::kSource;
  int true_id = 0;
  Vec input;
};

struct Dataset {
  std::vector<Sample> samples;
};

struct Scenario {
  Dataset source;
  Dataset target;
};

// Gaussian blobs around unit-norm prototypes drawn per identity from its own
// seed stream. Target identities are an independent resampling; every target
// sample then gets a fixed rotation (angle 0.5 * domain_shift radians on
// each coordinate plane) plus a shift of length domain_shift along a seeded
// unit direction. domain_shift = 0 leaves target samples bitwise untouched.
Scenario generate_scenario(const ScenarioConfig& config);

enum class PseudoCorrectness { kCorrect, kWrong, kOutlier };

// Majority true identity per cluster (ties broken by the lowest identity
// id); members matching their cluster's majority are correct, others wrong,
// unclustered samples outlier. pseudo must be positional over target.
std::vector<PseudoCorrectness> label_pseudo_correctness(
    const Dataset& target, const PseudoLabeledSet& pseudo);

// Layout: sample_id,domain,true_id,dim_0..dim_{D-1}. Doubles printed with 17
// significant digits so the file round-trips exactly.
void write_dataset_csv(std::ostream& out, const Dataset& dataset);

}  // namespace unrn
