#include "unrn/synth_data.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "unrn/config.hpp"
#include "unrn/rng.hpp"

namespace unrn {

namespace {

// Stream tags; every generator below derives from (seed, tag, identity).
constexpr std::uint64_t kSourceTag = 1;
constexpr std::uint64_t kTargetTag = 2;
constexpr std::uint64_t kShiftTag = 3;

constexpr double kRotationPerShift = 0.5;  // radians per unit of domain_shift

Vec draw_normals(Xoshiro256& rng, int dim) {
  Vec v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

// One identity's blob: unit prototype, then prototype + spread * noise.
void append_identity(Dataset& dataset, Xoshiro256& rng, Domain domain,
                     int identity, int samples_per_id, int dim, double spread) {
  const Vec prototype = l2_normalized(draw_normals(rng, dim));
  for (int j = 0; j < samples_per_id; ++j) {
    Sample s;
    s.sample_id = identity * samples_per_id + j;
    s.domain = domain;
    s.true_id = identity;
    s.input.resize(dim);
    const Vec noise = draw_normals(rng, dim);
    for (int k = 0; k < dim; ++k) s.input[k] = prototype[k] + spread * noise[k];
    dataset.samples.push_back(std::move(s));
  }
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& config) {
  config.validate();
  Scenario scenario;

  for (int id = 0; id < config.n_source_ids; ++id) {
    Xoshiro256 rng(mix_seed(config.seed, kSourceTag, static_cast<std::uint64_t>(id)));
    append_identity(scenario.source, rng, Domain::kSource, id,
                    config.samples_per_id, config.input_dim,
                    config.intra_class_spread);
  }

  const int n_boost = static_cast<int>(
      std::llround(config.noise_boost_fraction * config.n_target_ids));
  for (int id = 0; id < config.n_target_ids; ++id) {
    Xoshiro256 rng(mix_seed(config.seed, kTargetTag, static_cast<std::uint64_t>(id)));
    const double spread =
        config.intra_class_spread * (id < n_boost ? 3.0 : 1.0);
    append_identity(scenario.target, rng, Domain::kTarget, id,
                    config.samples_per_id, config.input_dim, spread);
  }

  if (config.domain_shift != 0.0) {
    Xoshiro256 shift_rng(mix_seed(config.seed, kShiftTag));
    const Vec shift_dir = l2_normalized(draw_normals(shift_rng, config.input_dim));
    const double angle = kRotationPerShift * config.domain_shift;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (Sample& sample : scenario.target.samples) {
      Vec& x = sample.input;
      for (int k = 0; k + 1 < config.input_dim; k += 2) {
        const double a = x[k];
        const double b = x[k + 1];
        x[k] = c * a - s * b;
        x[k + 1] = s * a + c * b;
      }
      for (int k = 0; k < config.input_dim; ++k) {
        x[k] += config.domain_shift * shift_dir[k];
      }
    }
  }
  return scenario;
}

std::vector<PseudoCorrectness> label_pseudo_correctness(
    const Dataset& target, const PseudoLabeledSet& pseudo) {
  const std::size_t n = target.samples.size();
  if (pseudo.labels.size() != n) throw std::invalid_argument("dimension mismatch");

  // Majority true identity per cluster; std::map iteration gives the
  // lowest-identity tie-break for free.
  std::vector<std::map<int, int>> counts(pseudo.n_clusters);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = pseudo.labels[i];
    if (label == kOutlierLabel) continue;
    counts[label][target.samples[i].true_id] += 1;
  }
  std::vector<int> majority(pseudo.n_clusters, -1);
  for (int c = 0; c < pseudo.n_clusters; ++c) {
    int best_count = 0;
    for (const auto& [identity, count] : counts[c]) {
      if (count > best_count) {
        best_count = count;
        majority[c] = identity;
      }
    }
  }

  std::vector<PseudoCorrectness> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = pseudo.labels[i];
    if (label == kOutlierLabel) {
      out[i] = PseudoCorrectness::kOutlier;
    } else if (target.samples[i].true_id == majority[label]) {
      out[i] = PseudoCorrectness::kCorrect;
    } else {
      out[i] = PseudoCorrectness::kWrong;
    }
  }
  return out;
}

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
  const int dim =
      dataset.samples.empty() ? 0 : static_cast<int>(dataset.samples[0].input.size());
  out << "sample_id,domain,true_id";
  for (int k = 0; k < dim; ++k) out << ",dim_" << k;
  out << "\n";
  char buf[64];
  for (const Sample& s : dataset.samples) {
    out << s.sample_id << ','
        << (s.domain == Domain::kSource ? "source" : "target") << ',' << s.true_id;
    for (double v : s.input) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << "\n";
  }
}

}  // namespace unrn
