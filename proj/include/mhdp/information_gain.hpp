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

// Monte Carlo information gain.
//
// K outer draws (z^k, X^k) are taken from one recognition chain: z^k is the
// chain state after burn-in and every `thin` sweeps, X^k ~ P(X^m | z^k).
// With a_kl = log P(X^k | z^l), the estimate is
//   IG = mean_k [ a_kk - log mean_l exp(a_kl) ],
// reusing all K latent draws in the denominator (own draw included). The
// multinomial coefficient of X^k cancels and is never computed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhdp/corpus.hpp"
#include "mhdp/error.hpp"
#include "mhdp/model.hpp"
#include "mhdp/numeric.hpp"
#include "mhdp/recognition.hpp"
#include "mhdp/rng.hpp"

namespace mhdp {

struct IGEstimate {
  std::size_t modality = 0;
  double value = 0.0;  // nats
  int mc_samples = 0;
  double std_error = 0.0;  // jackknife over outer draws; 0 when skipped

  friend bool operator==(const IGEstimate&, const IGEstimate&) = default;
};

struct McOptions {
  int mc_samples = 5000;
  int burnin = -1;  // < 0: the model's recog_burnin
  int thin = 1;
  bool jackknife = true;
  std::optional<bool> allow_new_dishes;  // unset: the model's setting

  int effective_burnin(const TrainedModel& m) const {
    return burnin < 0 ? m.config().recog_burnin : burnin;
  }
  bool effective_new_dishes(const TrainedModel& m) const {
    return allow_new_dishes.value_or(m.config().recog_new_dishes);
  }
};

// Outer draws for one candidate modality.
class McDraws {
 public:
  McDraws(int dim, int samples) : dim_(dim), samples_(samples) {
    logp_t_.resize(static_cast<std::size_t>(dim) * samples);
    start_.reserve(samples + 1);
    start_.push_back(0);
  }

  int dim() const { return dim_; }
  int samples() const { return samples_; }
  int filled() const { return static_cast<int>(start_.size()) - 1; }

  // Records p_z of draw k and the bag drawn from it.
  void add(std::span<const double> p, const Bof& bag) {
    const int k = filled();
    for (int x = 0; x < dim_; ++x) {
      logp_t_[static_cast<std::size_t>(x) * samples_ + k] = std::log(p[x]);
    }
    for (int x = 0; x < dim_; ++x) {
      if (bag[x] > 0) {
        feat_.push_back(x);
        count_.push_back(bag[x]);
      }
    }
    start_.push_back(static_cast<int>(feat_.size()));
  }

  // row[l] = a_kl for every l.
  void row(int k, std::vector<double>& out) const {
    out.assign(samples_, 0.0);
    for (int e = start_[k]; e < start_[k + 1]; ++e) {
      const double c = count_[e];
      const double* lp = &logp_t_[static_cast<std::size_t>(feat_[e]) * samples_];
      for (int l = 0; l < samples_; ++l) out[l] += c * lp[l];
    }
  }

 private:
  int dim_;
  int samples_;
  std::vector<double> logp_t_;  // [x][l]
  std::vector<int> start_;
  std::vector<int> feat_;
  std::vector<double> count_;
};

struct IgValue {
  double value = 0.0;
  double std_error = 0.0;
};

// IG and its leave-one-out jackknife error from complete draws. O(K^2)
// time, O(K) extra memory; the jackknife recomputes rows instead of
// storing the K x K matrix.
inline IgValue ig_from_draws(const McDraws& d, bool jackknife) {
  const int K = d.samples();
  if (d.filled() != K) throw ContractError("incomplete Monte Carlo draws");
  if (K < 1) throw ConfigError("mc_samples must be >= 1");
  std::vector<double> row;
  std::vector<double> ls(K), r(K), ls_wo_max(K);
  std::vector<int> arg(K);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    d.row(k, row);
    int hi = 0;
    for (int l = 1; l < K; ++l) {
      if (row[l] > row[hi]) hi = l;
    }
    double s = 0.0;
    double s_wo = 0.0;
    const double top = row[hi];
    for (int l = 0; l < K; ++l) {
      const double e = std::exp(row[l] - top);
      s += e;
      if (l != hi) s_wo += e;
    }
    ls[k] = top + std::log(s);
    ls_wo_max[k] = top + std::log(s_wo);  // -inf when K == 1
    arg[k] = hi;
    r[k] = row[k] - ls[k];
    total += r[k];
  }
  IgValue out;
  out.value = total / K + std::log(static_cast<double>(K));
  if (!jackknife || K < 2) return out;
  // C[i] = sum_{k != i} log(S_k^{-i} / S_k).
  std::vector<double> C(K, 0.0);
  for (int k = 0; k < K; ++k) {
    d.row(k, row);
    for (int i = 0; i < K; ++i) {
      if (i == k) continue;
      // Any non-maximal term is at most half of S_k, so log1p is stable.
      C[i] += i == arg[k] ? ls_wo_max[k] - ls[k]
                          : std::log1p(-std::exp(row[i] - ls[k]));
    }
  }
  const double log_km1 = std::log(static_cast<double>(K - 1));
  std::vector<double> loo(K);
  double mean = 0.0;
  for (int i = 0; i < K; ++i) {
    loo[i] = (total - r[i] - C[i]) / (K - 1) + log_km1;
    mean += loo[i];
  }
  mean /= K;
  double ss = 0.0;
  for (int i = 0; i < K; ++i) ss += (loo[i] - mean) * (loo[i] - mean);
  out.std_error = std::sqrt(ss * (K - 1) / K);
  return out;
}

inline void check_candidate(const TrainedModel& model, const ObjectRecord& obs,
                            std::size_t m) {
  if (m >= model.num_modalities()) {
    throw ConfigError("unknown modality " + std::to_string(m + 1));
  }
  if (obs.observations.count(m)) {
    throw ContractError("modality " + std::to_string(m + 1) +
                        " is already observed");
  }
}

// Estimates every candidate from one shared latent chain; candidate c
// draws its bags from the stream seeded by bag_seeds[c].
inline std::vector<IGEstimate> estimate_ig_mc_batch(
    const TrainedModel& model, const ObjectRecord& obs,
    std::span<const std::size_t> candidates, const McOptions& options,
    std::uint64_t chain_seed, std::span<const std::uint64_t> bag_seeds) {
  if (bag_seeds.size() != candidates.size()) {
    throw ContractError("one bag seed per candidate is required");
  }
  if (options.mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  if (options.thin < 1) throw ConfigError("thin must be >= 1");
  for (std::size_t m : candidates) check_candidate(model, obs, m);
  const int K = options.mc_samples;
  const bool allow_new = options.effective_new_dishes(model);
  std::vector<McDraws> draws;
  std::vector<Rng> rngs;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    draws.emplace_back(model.modalities()[candidates[c]].dimension, K);
    rngs.emplace_back(bag_seeds[c]);
  }
  LatentChain chain(model, obs, chain_seed, allow_new);
  chain.sweep(options.effective_burnin(model));
  std::vector<int> dishes;
  std::vector<double> masses;
  std::vector<double> p;
  for (int k = 0; k < K; ++k) {
    chain.sweep(options.thin);
    dishes.clear();
    masses.clear();
    for (const Table& t : chain.restaurant().tables) {
      dishes.push_back(t.dish);
      masses.push_back(t.mass);
    }
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const std::size_t m = candidates[c];
      p.resize(model.modalities()[m].dimension);
      modality_predictive(model, dishes, masses, m, allow_new, p);
      draws[c].add(p, draw_bof(p, model.modalities()[m].token_count, rngs[c]));
    }
  }
  std::vector<IGEstimate> out;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const IgValue v = ig_from_draws(draws[c], options.jackknife);
    out.push_back({candidates[c], v.value, K, v.std_error});
  }
  return out;
}

inline IGEstimate estimate_ig_mc(const TrainedModel& model,
                                 const ObjectRecord& obs, std::size_t m,
                                 const McOptions& options, std::uint64_t seed) {
  const std::size_t cand[1] = {m};
  const std::uint64_t bag[1] = {derive_seed(seed, {0x626167ULL, m})};
  return estimate_ig_mc_batch(model, obs, cand, options,
                              derive_seed(seed, {0x6368ULL}), bag)[0];
}

inline IGEstimate estimate_ig_mc(const TrainedModel& model,
                                 const ObjectRecord& obs, std::size_t m,
                                 int mc_samples, std::uint64_t seed) {
  McOptions o;
  o.mc_samples = mc_samples;
  return estimate_ig_mc(model, obs, m, o, seed);
}

}  // namespace mhdp
