// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "mhdp/exact.hpp"
#include "mhdp/information_gain.hpp"
#include "oracles/instances.hpp"
#include "test_util.hpp"

namespace mhdp {
namespace {

using testing::make_model;
using testing::make_obs;
using testing::modalities;

// Direct O(K^3) evaluation from the full matrix a[k][l] = log P(bag_k | z_l).
double direct_ig(const std::vector<std::vector<double>>& a,
                 const std::vector<int>& keep) {
  double s = 0.0;
  for (int k : keep) {
    std::vector<double> row;
    for (int l : keep) row.push_back(a[k][l]);
    s += a[k][k] - log_sum_exp(row);
  }
  return s / keep.size() + std::log(static_cast<double>(keep.size()));
}

struct RandomDraws {
  McDraws draws;
  std::vector<std::vector<double>> a;
};

RandomDraws random_draws(int K, int dim, int tokens, std::uint64_t seed) {
  Rng rng(seed);
  RandomDraws r{McDraws(dim, K), {}};
  std::vector<std::vector<double>> ps;
  std::vector<Bof> bags;
  for (int k = 0; k < K; ++k) {
    ps.push_back(rng.dirichlet(0.7, dim));
    bags.push_back(draw_bof(ps.back(), tokens, rng));
    r.draws.add(ps.back(), bags.back());
  }
  r.a.assign(K, std::vector<double>(K, 0.0));
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < K; ++l) {
      for (int x = 0; x < dim; ++x) r.a[k][l] += bags[k][x] * std::log(ps[l][x]);
    }
  }
  return r;
}

TEST(IgFromDraws, MatchesTheDirectFormula) {
  const RandomDraws r = random_draws(40, 4, 6, 3);
  std::vector<int> all(40);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_NEAR(ig_from_draws(r.draws, false).value, direct_ig(r.a, all), 1e-12);
}

TEST(IgFromDraws, JackknifeMatchesExplicitLeaveOneOut) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const int K = 30;
    const RandomDraws r = random_draws(K, 3, 8, seed);
    std::vector<double> loo;
    for (int i = 0; i < K; ++i) {
      std::vector<int> keep;
      for (int k = 0; k < K; ++k) {
        if (k != i) keep.push_back(k);
      }
      loo.push_back(direct_ig(r.a, keep));
    }
    double mean = 0.0;
    for (double v : loo) mean += v / K;
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    const double se = std::sqrt((K - 1.0) / K * ss);
    EXPECT_NEAR(ig_from_draws(r.draws, true).std_error, se, 1e-10);
  }
}

TEST(IgFromDraws, SingleDrawHasZeroGain) {
  McDraws d(2, 1);
  const std::vector<double> p{0.3, 0.7};
  d.add(p, {1, 2});
  const IgValue v = ig_from_draws(d, true);
  EXPECT_NEAR(v.value, 0.0, 1e-15);
  EXPECT_EQ(v.std_error, 0.0);
}

TEST(EstimateIgMc, SingleTopicGivesZero) {
  const TrainedModel m = make_model(modalities({3, 4}, {2, 5}), {},
                                    {{0, 0, {{0, 0, 2}, {1, 3, 4}}},
                                     {1, 0, {{0, 1, 1}, {1, 1, 2}}}},
                                    1);
  McOptions o;
  o.mc_samples = 500;
  // With novel topics allowed z is not degenerate: a novel topic emits
  // uniformly, so the gain is small but real.
  const IGEstimate e = estimate_ig_mc(m, make_obs({{0, {1, 1, 0}}}), 1, o, 4);
  EXPECT_GE(e.value, -3 * e.std_error);
  o.allow_new_dishes = false;
  const IGEstimate f = estimate_ig_mc(m, make_obs({{0, {1, 1, 0}}}), 1, o, 4);
  EXPECT_NEAR(f.value, 0.0, 1e-12);
  EXPECT_EQ(f.modality, 1u);
  EXPECT_EQ(f.mc_samples, 500);
}

TEST(EstimateIgMc, AgreesWithExactIg) {
  McOptions o;
  o.mc_samples = 3000;
  o.allow_new_dishes = false;
  int within = 0, trials = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const testing::Instance inst = testing::random_instance(seed);
    ExactOracle oracle(inst.model, inst.obs);
    for (std::size_t m : oracle.unobserved()) {
      const std::size_t A[1] = {m};
      const double exact = oracle.ig(A);
      const IGEstimate e = estimate_ig_mc(inst.model, inst.obs, m, o, seed * 31 + m);
      ++trials;
      within += std::abs(e.value - exact) <= 3 * e.std_error;
    }
  }
  EXPECT_GE(within, trials - 1) << within << "/" << trials;
}

TEST(EstimateIgMc, StandardErrorShrinksWithSamples) {
  SyntheticConfig c;
  c.num_pure = 4;
  c.num_mixed = 2;
  c.objects_per_class = 2;
  c.num_modalities = 5;
  c.seed = 2;
  const Dataset d = generate_synthetic(c);
  ModelConfig mc;
  mc.train_sweeps = 30;
  const TrainedModel m = train(d, mc, 2);
  const std::size_t first[1] = {0};
  const ObjectRecord obs = restrict_to(d.objects[0], first);
  const IGEstimate small = estimate_ig_mc(m, obs, 3, 250, 9);
  const IGEstimate large = estimate_ig_mc(m, obs, 3, 5000, 9);
  EXPECT_GT(small.std_error, 0.0);
  EXPECT_LT(large.std_error, small.std_error);
  EXPECT_GE(large.value, -3 * large.std_error);
}

TEST(EstimateIgMc, DeterministicAndBatchConsistent) {
  const testing::Instance inst = testing::random_instance(12);
  McOptions o;
  o.mc_samples = 400;
  const IGEstimate a = estimate_ig_mc(inst.model, inst.obs, 2, o, 5);
  const IGEstimate b = estimate_ig_mc(inst.model, inst.obs, 2, o, 5);
  EXPECT_EQ(a, b);
  // A batch sharing the chain seed reproduces each single estimate.
  const std::vector<std::size_t> cands{1, 2, 3};
  std::vector<std::uint64_t> bags;
  for (std::size_t m : cands) bags.push_back(derive_seed(5, {0x626167ULL, m}));
  const auto batch = estimate_ig_mc_batch(inst.model, inst.obs, cands, o,
                                          derive_seed(5, {0x6368ULL}), bags);
  EXPECT_EQ(batch[1], a);
}

TEST(EstimateIgMc, RejectsBadRequests) {
  const testing::Instance inst = testing::random_instance(1);
  EXPECT_THROW(estimate_ig_mc(inst.model, inst.obs, 0, 100, 1), ContractError);
  EXPECT_THROW(estimate_ig_mc(inst.model, inst.obs, 9, 100, 1), ConfigError);
  EXPECT_THROW(estimate_ig_mc(inst.model, inst.obs, 1, 0, 1), ConfigError);
  McOptions o;
  o.thin = 0;
  EXPECT_THROW(estimate_ig_mc(inst.model, inst.obs, 1, o, 1), ConfigError);
  const std::vector<std::size_t> cands{1, 2};
  const std::vector<std::uint64_t> one{1};
  EXPECT_THROW(estimate_ig_mc_batch(inst.model, inst.obs, cands, {}, 1, one),
               ContractError);
}

}  // namespace
}  // namespace mhdp
