#include <benchmark/benchmark.h>

#include <vector>

#include "unrn/clustering.hpp"
#include "unrn/encoder.hpp"
#include "unrn/losses.hpp"
#include "unrn/memory_bank.hpp"
#include "unrn/metrics.hpp"
#include "unrn/rng.hpp"
#include "unrn/uncertainty.hpp"

namespace {

using unrn::Matrix;
using unrn::Vec;

Vec random_unit(unrn::Xoshiro256& rng, int dim) {
  Vec v(dim);
  for (double& x : v) x = rng.normal();
  return unrn::l2_normalized(v);
}

// Clumped unit features resembling a clustering round's teacher output.
std::vector<Vec> clumped_features(std::size_t n, int dim, int n_clumps,
                                  std::uint64_t seed) {
  unrn::Xoshiro256 rng(unrn::mix_seed(seed));
  Matrix prototypes;
  for (int c = 0; c < n_clumps; ++c) prototypes.push_back(random_unit(rng, dim));
  std::vector<Vec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec p = prototypes[i % prototypes.size()];
    for (double& x : p) x += 0.1 * rng.normal();
    out.push_back(unrn::l2_normalized(p));
  }
  return out;
}

void BM_Dbscan(benchmark::State& state) {
  const auto features =
      clumped_features(static_cast<std::size_t>(state.range(0)), 16, 20, 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(unrn::dbscan(features, 0.15, 4));
  }
}
BENCHMARK(BM_Dbscan)->Arg(150)->Arg(600);

void BM_EncoderForward(benchmark::State& state) {
  const unrn::EncoderDims dims{16, 32, 16};
  const unrn::EncoderParams params =
      unrn::EncoderParams::scaled_uniform_init(unrn::mix_seed(43), dims);
  unrn::Xoshiro256 rng(unrn::mix_seed(44));
  Vec input(16);
  for (double& x : input) x = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(unrn::encoder_forward(params, input));
  }
}
BENCHMARK(BM_EncoderForward);

void BM_SampleUncertainty(benchmark::State& state) {
  unrn::Xoshiro256 rng(unrn::mix_seed(45));
  Matrix rows;
  for (int i = 0; i < state.range(0); ++i) rows.push_back(random_unit(rng, 16));
  const unrn::ReferenceBank refs =
      unrn::build_reference_bank(rows, {}, unrn::ReferenceMode::kTargetOnly);
  const Vec f_s = random_unit(rng, 16);
  const Vec f_t = random_unit(rng, 16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(unrn::sample_uncertainty(refs, f_s, f_t, 0.05));
  }
}
BENCHMARK(BM_SampleUncertainty)->Arg(35);

void BM_IdLoss(benchmark::State& state) {
  unrn::Xoshiro256 rng(unrn::mix_seed(46));
  const int n = 16, n_classes = 20, dim = 16;
  std::vector<int> ids, labels;
  std::vector<Vec> features;
  std::vector<double> omegas;
  Matrix centers;
  for (int c = 0; c < n_classes; ++c) centers.push_back(random_unit(rng, dim));
  for (int i = 0; i < n; ++i) {
    ids.push_back(i);
    features.push_back(random_unit(rng, dim));
    labels.push_back(static_cast<int>(rng.uniform_index(n_classes)));
    omegas.push_back(0.5 + 0.5 * rng.uniform());
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        unrn::id_loss(ids, features, labels, omegas, centers, 16.0));
  }
}
BENCHMARK(BM_IdLoss);

void BM_BatchHardTriplets(benchmark::State& state) {
  unrn::Xoshiro256 rng(unrn::mix_seed(47));
  const int n = 16, dim = 16;
  std::vector<int> ids, labels;
  std::vector<Vec> features;
  for (int i = 0; i < n; ++i) {
    ids.push_back(i);
    features.push_back(random_unit(rng, dim));
    labels.push_back(i / 4);  // the default P=4, K=4 layout
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(unrn::batch_hard_triplets(ids, features, labels));
  }
}
BENCHMARK(BM_BatchHardTriplets);

void BM_UctLoss(benchmark::State& state) {
  unrn::Xoshiro256 rng(unrn::mix_seed(48));
  const int dim = 16;
  Matrix source_centers;
  for (int c = 0; c < 15; ++c) source_centers.push_back(random_unit(rng, dim));
  unrn::MemoryBank bank(static_cast<std::size_t>(state.range(0)), source_centers);
  const int fill = static_cast<int>(state.range(0));
  std::vector<Vec> entry_feats;
  std::vector<int> entry_labels;
  std::vector<double> entry_u;
  for (int i = 0; i < fill; ++i) {
    entry_feats.push_back(random_unit(rng, dim));
    entry_labels.push_back(static_cast<int>(rng.uniform_index(20)));
    entry_u.push_back(rng.uniform(0.0, 0.5));
  }
  bank.push_batch(entry_feats, entry_labels, entry_u);

  std::vector<int> ids, labels;
  std::vector<Vec> features;
  std::vector<double> u;
  for (int i = 0; i < 16; ++i) {
    ids.push_back(i);
    features.push_back(random_unit(rng, dim));
    labels.push_back(i / 4);
    u.push_back(rng.uniform(0.0, 0.5));
  }
  const unrn::CircleParams circle;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        unrn::uct_loss(ids, features, labels, u, bank, circle));
  }
}
BENCHMARK(BM_UctLoss)->Arg(64)->Arg(512);

void BM_EvaluateRetrieval(benchmark::State& state) {
  unrn::Xoshiro256 rng(unrn::mix_seed(49));
  const int n_ids = 20, dim = 16;
  std::vector<Vec> queries, gallery;
  std::vector<int> query_ids, gallery_ids;
  for (int i = 0; i < 200; ++i) {
    const int id = i % n_ids;
    (i < 60 ? queries : gallery).push_back(random_unit(rng, dim));
    (i < 60 ? query_ids : gallery_ids).push_back(id);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        unrn::evaluate_retrieval(queries, query_ids, gallery, gallery_ids));
  }
}
BENCHMARK(BM_EvaluateRetrieval);

}  // namespace

BENCHMARK_MAIN();
