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

// Action selection: greedy and lazy greedy over a gain oracle, plus the
// random and brute-force baselines.
//
// A gain oracle provides
//   std::vector<IGEstimate> evaluate_all(int round, span<const size_t>);
//   IGEstimate evaluate_one(int round, size_t m, int attempt);
//   void commit(size_t m);
// evaluate_all scores every candidate of a round, evaluate_one re-scores one
// (lazy greedy), commit executes an action.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mhdp/corpus.hpp"
#include "mhdp/error.hpp"
#include "mhdp/exact.hpp"
#include "mhdp/information_gain.hpp"
#include "mhdp/model.hpp"
#include "mhdp/rng.hpp"

namespace mhdp {

struct PlanStep {
  std::size_t modality = 0;
  std::optional<IGEstimate> ig;  // value at selection time; absent for random
};

struct ActionPlan {
  std::vector<PlanStep> steps;
  std::vector<std::size_t> initial_observed;
  int budget = 0;

  std::vector<std::size_t> order() const {
    std::vector<std::size_t> out;
    for (const auto& s : steps) out.push_back(s.modality);
    return out;
  }
};

struct PlannerStats {
  long ig_evaluations = 0;
  long re_evaluations = 0;
  std::chrono::duration<double> wall_time{0.0};
};

struct PlanResult {
  ActionPlan plan;
  PlannerStats stats;
};

// Modalities outside `observed`, ascending; throws when fewer than L.
inline std::vector<std::size_t> remaining_actions(
    std::size_t num_modalities, std::span<const std::size_t> observed, int L) {
  std::set<std::size_t> seen;
  for (std::size_t m : observed) {
    if (m >= num_modalities) {
      throw ConfigError("unknown modality " + std::to_string(m + 1));
    }
    if (!seen.insert(m).second) {
      throw ConfigError("modality " + std::to_string(m + 1) +
                        " listed twice in the observed set");
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < num_modalities; ++m) {
    if (!seen.count(m)) out.push_back(m);
  }
  if (L < 0 || static_cast<std::size_t>(L) > out.size()) {
    throw BudgetError("budget " + std::to_string(L) + " exceeds the " +
                      std::to_string(out.size()) + " remaining actions");
  }
  return out;
}

namespace detail {

// Highest value, lowest modality index on ties.
inline bool better(const IGEstimate& a, const IGEstimate& b) {
  return a.value > b.value || (a.value == b.value && a.modality < b.modality);
}

}  // namespace detail

template <class Oracle>
PlanResult greedy_plan(Oracle& oracle, std::vector<std::size_t> remaining,
                       std::vector<std::size_t> initial_observed, int L) {
  const auto t0 = std::chrono::steady_clock::now();
  PlanResult out;
  out.plan.initial_observed = std::move(initial_observed);
  out.plan.budget = L;
  for (int round = 0; round < L; ++round) {
    const std::vector<IGEstimate> ests = oracle.evaluate_all(round, remaining);
    out.stats.ig_evaluations += static_cast<long>(remaining.size());
    std::size_t best = 0;
    for (std::size_t i = 1; i < ests.size(); ++i) {
      if (detail::better(ests[i], ests[best])) best = i;
    }
    const std::size_t m = ests[best].modality;
    out.plan.steps.push_back({m, ests[best]});
    oracle.commit(m);
    remaining.erase(std::find(remaining.begin(), remaining.end(), m));
  }
  out.stats.wall_time = std::chrono::steady_clock::now() - t0;
  return out;
}

// Lazy greedy: after a full first round, keep stale values; repeatedly
// re-evaluate the top candidate m1 and accept it once its fresh value is
// >= the runner-up's stored value minus `slack`.
template <class Oracle>
PlanResult lazy_plan(Oracle& oracle, std::vector<std::size_t> remaining,
                     std::vector<std::size_t> initial_observed, int L,
                     double slack = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  PlanResult out;
  out.plan.initial_observed = std::move(initial_observed);
  out.plan.budget = L;
  if (L == 0) return out;
  std::vector<IGEstimate> stack = oracle.evaluate_all(0, remaining);
  out.stats.ig_evaluations += static_cast<long>(remaining.size());
  auto sort_stack = [&] {
    std::stable_sort(stack.begin(), stack.end(), detail::better);
  };
  sort_stack();
  out.plan.steps.push_back({stack.front().modality, stack.front()});
  oracle.commit(stack.front().modality);
  stack.erase(stack.begin());
  for (int round = 1; round < L; ++round) {
    for (int attempt = 0;; ++attempt) {
      const IGEstimate fresh =
          oracle.evaluate_one(round, stack.front().modality, attempt);
      ++out.stats.ig_evaluations;
      ++out.stats.re_evaluations;
      stack.front() = fresh;
      if (stack.size() == 1 || fresh.value >= stack[1].value - slack) break;
      sort_stack();
    }
    out.plan.steps.push_back({stack.front().modality, stack.front()});
    oracle.commit(stack.front().modality);
    stack.erase(stack.begin());
  }
  out.stats.wall_time = std::chrono::steady_clock::now() - t0;
  return out;
}

// Adaptive Monte Carlo oracle: committing an action reveals the target's
// stored bag. A round's full evaluation shares one latent chain; every
// lazy re-evaluation runs its own chain.
class McGainOracle {
 public:
  McGainOracle(const TrainedModel& model, const ObjectRecord& target,
               std::vector<std::size_t> observed, McOptions options,
               std::uint64_t seed)
      : model_(&model),
        target_(&target),
        observed_(std::move(observed)),
        options_(options),
        seed_(seed) {
    current_ = restrict_to(target, observed_);
  }

  std::vector<IGEstimate> evaluate_all(int round,
                                       std::span<const std::size_t> cand) {
    std::vector<std::uint64_t> bag_seeds;
    for (std::size_t m : cand) {
      bag_seeds.push_back(derive_seed(seed_, {kBag, std::uint64_t(round), m}));
    }
    return estimate_ig_mc_batch(*model_, current_, cand, options_,
                                derive_seed(seed_, {kChain, std::uint64_t(round)}),
                                bag_seeds);
  }

  IGEstimate evaluate_one(int round, std::size_t m, int attempt) {
    const std::size_t cand[1] = {m};
    const std::uint64_t bag[1] = {derive_seed(
        seed_, {kBag, std::uint64_t(round), m, std::uint64_t(attempt) + 1})};
    return estimate_ig_mc_batch(
        *model_, current_, cand, options_,
        derive_seed(seed_, {kChain, std::uint64_t(round), m,
                            std::uint64_t(attempt) + 1}),
        bag)[0];
  }

  void commit(std::size_t m) {
    observed_.push_back(m);
    current_ = restrict_to(*target_, observed_);
  }

 private:
  static constexpr std::uint64_t kChain = 0x636861696eULL;
  static constexpr std::uint64_t kBag = 0x626167ULL;

  const TrainedModel* model_;
  const ObjectRecord* target_;
  std::vector<std::size_t> observed_;
  McOptions options_;
  std::uint64_t seed_;
  ObjectRecord current_;
};

// Non-adaptive exact oracle: the gain of m is IG(A + m) - IG(A) for the
// actions A chosen so far.
class ExactGainOracle {
 public:
  ExactGainOracle(const TrainedModel& model, const ObjectRecord& obs)
      : oracle_(model, obs) {}

  std::vector<IGEstimate> evaluate_all(int round,
                                       std::span<const std::size_t> cand) {
    std::vector<IGEstimate> out;
    for (std::size_t m : cand) out.push_back(evaluate_one(round, m, 0));
    return out;
  }

  IGEstimate evaluate_one(int, std::size_t m, int) {
    std::vector<std::size_t> s = chosen_;
    s.push_back(m);
    return {m, oracle_.ig(s) - base_, 0, 0.0};
  }

  void commit(std::size_t m) {
    chosen_.push_back(m);
    base_ = oracle_.ig(chosen_);
  }

  ExactOracle& oracle() { return oracle_; }

 private:
  ExactOracle oracle_;
  std::vector<std::size_t> chosen_;
  double base_ = 0.0;
};

inline std::vector<std::size_t> initial_set(const ObjectRecord& target,
                                            std::span<const std::size_t> init) {
  std::vector<std::size_t> out(init.begin(), init.end());
  for (std::size_t m : out) {
    if (!target.observations.count(m)) {
      throw ContractError("target has no stored observation for modality " +
                          std::to_string(m + 1));
    }
  }
  return out;
}

inline void require_stored(const ObjectRecord& target,
                           std::span<const std::size_t> modalities) {
  for (std::size_t m : modalities) {
    if (!target.observations.count(m)) {
      throw ContractError("target has no stored observation for modality " +
                          std::to_string(m + 1));
    }
  }
}

inline PlanResult greedy_select(const TrainedModel& model,
                                const ObjectRecord& target,
                                std::span<const std::size_t> initial, int L,
                                const McOptions& options, std::uint64_t seed) {
  auto init = initial_set(target, initial);
  auto rem = remaining_actions(model.num_modalities(), init, L);
  require_stored(target, rem);
  McGainOracle oracle(model, target, init, options, seed);
  return greedy_plan(oracle, rem, init, L);
}

inline PlanResult lazy_greedy_select(const TrainedModel& model,
                                     const ObjectRecord& target,
                                     std::span<const std::size_t> initial,
                                     int L, const McOptions& options,
                                     std::uint64_t seed, double slack = 0.0) {
  auto init = initial_set(target, initial);
  auto rem = remaining_actions(model.num_modalities(), init, L);
  require_stored(target, rem);
  McGainOracle oracle(model, target, init, options, seed);
  return lazy_plan(oracle, rem, init, L, slack);
}

inline PlanResult random_select(const TrainedModel& model,
                                std::span<const std::size_t> initial, int L,
                                std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::size_t> init(initial.begin(), initial.end());
  std::vector<std::size_t> rem =
      remaining_actions(model.num_modalities(), init, L);
  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < rem.size(); ++i) {
    std::swap(rem[i], rem[i + rng.below(rem.size() - i)]);
  }
  PlanResult out;
  out.plan.initial_observed = init;
  out.plan.budget = L;
  for (int l = 0; l < L; ++l) out.plan.steps.push_back({rem[l], std::nullopt});
  out.stats.wall_time = std::chrono::steady_clock::now() - t0;
  return out;
}

// Exact-gain planners over the observations in `obs` (tiny instances).
inline PlanResult greedy_select_exact(const TrainedModel& model,
                                      const ObjectRecord& obs, int L) {
  const auto init = observed_modalities(obs);
  ExactGainOracle oracle(model, obs);
  return greedy_plan(oracle, remaining_actions(model.num_modalities(), init, L),
                     init, L);
}

inline PlanResult lazy_greedy_select_exact(const TrainedModel& model,
                                           const ObjectRecord& obs, int L) {
  const auto init = observed_modalities(obs);
  ExactGainOracle oracle(model, obs);
  return lazy_plan(oracle, remaining_actions(model.num_modalities(), init, L),
                   init, L);
}

struct BruteForceResult {
  ActionPlan plan;  // chosen subset, ascending
  double exact_ig = 0.0;
};

// Every subset of size <= L of the unobserved modalities, ascending order
// within a subset; ties go to the lexicographically smallest subset.
inline std::vector<std::vector<std::size_t>> subsets_up_to(
    std::span<const std::size_t> items, int L) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  auto rec = [&](auto&& self, std::size_t from) -> void {
    out.push_back(cur);
    if (static_cast<int>(cur.size()) == L) return;
    for (std::size_t i = from; i < items.size(); ++i) {
      cur.push_back(items[i]);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

inline BruteForceResult brute_force_select(const TrainedModel& model,
                                           const ObjectRecord& obs, int L) {
  const auto init = observed_modalities(obs);
  const auto rem = remaining_actions(model.num_modalities(), init, L);
  ExactOracle oracle(model, obs);
  BruteForceResult best;
  best.plan.initial_observed = init;
  best.plan.budget = L;
  best.exact_ig = -1.0;
  std::vector<std::size_t> arg;
  for (const auto& s : subsets_up_to(rem, L)) {
    const double v = oracle.ig(s);
    if (v > best.exact_ig) {
      best.exact_ig = v;
      arg = s;
    }
  }
  for (std::size_t m : arg) best.plan.steps.push_back({m, std::nullopt});
  return best;
}

}  // namespace mhdp
