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

// Category-posterior distance, the active-perception experiment harness and
// the information-gain variance sweep.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mhdp/corpus.hpp"
#include "mhdp/error.hpp"
#include "mhdp/information_gain.hpp"
#include "mhdp/model.hpp"
#include "mhdp/numeric.hpp"
#include "mhdp/parallel.hpp"
#include "mhdp/planner.hpp"
#include "mhdp/recognition.hpp"

namespace mhdp {

inline constexpr double kKlEpsilon = 1e-10;

// KL(p || q) in nats after adding eps to every mass and renormalizing both.
inline double kl_divergence(std::span<const double> p,
                            std::span<const double> q,
                            double eps = kKlEpsilon) {
  if (p.size() != q.size()) {
    throw DimensionError("kl_divergence: length " + std::to_string(p.size()) +
                         " vs " + std::to_string(q.size()));
  }
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !(q[i] >= 0.0)) {
      throw ContractError("kl_divergence: negative mass");
    }
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6) {
    throw ContractError("kl_divergence: inputs must sum to 1");
  }
  const double zp = sp + eps * p.size();
  const double zq = sq + eps * q.size();
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = (p[i] + eps) / zp;
    const double b = (q[i] + eps) / zq;
    kl += a * std::log(a / b);
  }
  return std::max(kl, 0.0);
}

enum class Policy { kGreedy, kLazy, kRandom };

inline Policy parse_policy(const std::string& s) {
  if (s == "greedy") return Policy::kGreedy;
  if (s == "lazy") return Policy::kLazy;
  if (s == "random") return Policy::kRandom;
  throw ConfigError("unknown policy '" + s + "' (expected greedy, lazy or random)");
}

struct ExperimentConfig {
  std::vector<std::string> policies{"greedy", "lazy", "random"};
  int budget = 19;
  std::vector<std::size_t> initial_observed{0};
  McOptions mc;
  int num_seeds = 5;
  std::uint64_t seed = 0;
  double lazy_slack = 0.0;
  int jobs = 1;
  // Called after each finished (object, seed) unit; may run on any worker.
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct PolicyRun {
  std::vector<std::size_t> order;
  std::vector<double> kl_to_final;  // steps 0..budget
  long ig_evaluations = 0;
  long re_evaluations = 0;
  double wall_seconds = 0.0;  // informational; never serialized
};

struct UnitResult {
  int object_id = 0;
  std::uint64_t seed = 0;
  std::vector<double> final_posterior;
  std::vector<PolicyRun> runs;  // aligned with ExperimentReport::policies
};

struct SummaryRow {
  std::string policy;
  int step = 0;
  double mean_kl = 0.0;
  double sd_kl = 0.0;
  std::size_t count = 0;
};

struct StatsRow {
  std::string policy;
  double mean_evals = 0.0;
  double sd_evals = 0.0;
};

struct ExperimentReport {
  std::vector<std::string> policies;
  int budget = 0;
  std::vector<UnitResult> units;

  std::vector<SummaryRow> summary() const {
    std::vector<SummaryRow> out;
    if (units.empty()) return out;
    for (std::size_t p = 0; p < policies.size(); ++p) {
      for (int l = 0; l <= budget; ++l) {
        std::vector<double> xs;
        for (const auto& u : units) xs.push_back(u.runs[p].kl_to_final[l]);
        const MeanSd ms = mean_sd(xs);
        out.push_back({policies[p], l, ms.mean, ms.sd, ms.n});
      }
    }
    return out;
  }

  std::vector<StatsRow> stats() const {
    std::vector<StatsRow> out;
    if (units.empty()) return out;
    for (std::size_t p = 0; p < policies.size(); ++p) {
      std::vector<double> xs;
      for (const auto& u : units) {
        xs.push_back(static_cast<double>(u.runs[p].ig_evaluations));
      }
      const MeanSd ms = mean_sd(xs);
      out.push_back({policies[p], ms.mean, ms.sd});
    }
    return out;
  }

  // Mean kl_to_final per step of one policy.
  std::vector<double> mean_curve(const std::string& policy) const {
    for (std::size_t p = 0; p < policies.size(); ++p) {
      if (policies[p] != policy) continue;
      std::vector<double> c(budget + 1, 0.0);
      for (const auto& u : units) {
        for (int l = 0; l <= budget; ++l) c[l] += u.runs[p].kl_to_final[l];
      }
      if (!units.empty()) {
        for (double& v : c) v /= static_cast<double>(units.size());
      }
      return c;
    }
    throw ConfigError("policy '" + policy + "' not in report");
  }
};

namespace detail {

inline constexpr std::uint64_t kRecogTag = 0x7265636fULL;
inline constexpr std::uint64_t kPlanTag = 0x706c616eULL;
inline constexpr std::uint64_t kRandomTag = 0x72616e64ULL;

inline UnitResult run_unit(const TrainedModel& model, const ObjectRecord& target,
                           std::uint64_t replicate_seed,
                           const ExperimentConfig& cfg,
                           const std::vector<Policy>& policies) {
  UnitResult u;
  u.object_id = target.object_id;
  u.seed = replicate_seed;
  const std::uint64_t unit_seed =
      derive_seed(replicate_seed, {static_cast<std::uint64_t>(target.object_id)});
  // One recognition seed for the final state and for every step, so that
  // revealing everything reproduces the final state exactly.
  const std::uint64_t rec_seed = derive_seed(unit_seed, {kRecogTag});
  const RecognitionOptions ropt = RecognitionOptions::from(model.config());
  std::map<std::vector<std::size_t>, std::vector<double>> memo;
  auto posterior = [&](std::vector<std::size_t> observed) {
    std::sort(observed.begin(), observed.end());
    auto it = memo.find(observed);
    if (it != memo.end()) return it->second;
    const auto p =
        recognize(model, restrict_to(target, observed), rec_seed, ropt)
            .category_posterior;
    memo.emplace(observed, p);
    return p;
  };
  std::vector<std::size_t> all;
  for (const auto& [m, bof] : target.observations) all.push_back(m);
  u.final_posterior = posterior(all);
  const std::uint64_t plan_seed = derive_seed(unit_seed, {kPlanTag});
  for (Policy p : policies) {
    PlanResult pr;
    switch (p) {
      case Policy::kGreedy:
        pr = greedy_select(model, target, cfg.initial_observed, cfg.budget,
                           cfg.mc, plan_seed);
        break;
      case Policy::kLazy:
        pr = lazy_greedy_select(model, target, cfg.initial_observed, cfg.budget,
                                cfg.mc, plan_seed, cfg.lazy_slack);
        break;
      case Policy::kRandom:
        pr = random_select(model, cfg.initial_observed, cfg.budget,
                           derive_seed(unit_seed, {kRandomTag}));
        break;
    }
    PolicyRun run;
    run.order = pr.plan.order();
    run.ig_evaluations = pr.stats.ig_evaluations;
    run.re_evaluations = pr.stats.re_evaluations;
    run.wall_seconds = pr.stats.wall_time.count();
    std::vector<std::size_t> observed = cfg.initial_observed;
    for (int l = 0; l <= cfg.budget; ++l) {
      if (l > 0) observed.push_back(run.order[l - 1]);
      run.kl_to_final.push_back(kl_divergence(u.final_posterior, posterior(observed)));
    }
    u.runs.push_back(std::move(run));
  }
  return u;
}

}  // namespace detail

inline ExperimentReport run_experiment(const Dataset& data,
                                       const TrainedModel& model,
                                       const ExperimentConfig& cfg) {
  if (data.modalities != model.modalities()) {
    throw ConfigError("dataset and model declare different modalities");
  }
  if (cfg.num_seeds < 1) throw ConfigError("need at least one experiment seed");
  if (cfg.policies.empty()) throw ConfigError("need at least one policy");
  std::vector<Policy> policies;
  for (const auto& s : cfg.policies) policies.push_back(parse_policy(s));
  remaining_actions(model.num_modalities(), cfg.initial_observed, cfg.budget);
  for (const auto& o : data.objects) {
    if (o.observations.size() != model.num_modalities()) {
      throw ConfigError("object " + std::to_string(o.object_id) +
                        " lacks some modalities");
    }
  }
  ExperimentReport rep;
  rep.policies = cfg.policies;
  rep.budget = cfg.budget;
  const std::size_t n_obj = data.objects.size();
  const std::size_t total = n_obj * static_cast<std::size_t>(cfg.num_seeds);
  rep.units.resize(total);
  std::atomic<std::size_t> done{0};
  parallel_for(total, cfg.jobs, [&](std::size_t i) {
    const std::size_t s = i / n_obj;
    const ObjectRecord& target = data.objects[i % n_obj];
    rep.units[i] = detail::run_unit(model, target, cfg.seed + s, cfg, policies);
    const std::size_t d = ++done;
    if (cfg.progress) cfg.progress(d, total);
  });
  return rep;
}

struct SweepRow {
  int mc_samples = 0;
  int replicates = 0;
  double mean = 0.0;
  double sd = 0.0;
  double se_mean = 0.0;      // sd / sqrt(replicates)
  double mean_jackknife = 0.0;  // mean per-run jackknife error (0 if off)
};

inline std::vector<SweepRow> ig_variance_sweep(
    const TrainedModel& model, const ObjectRecord& observations, std::size_t m,
    std::span<const int> sample_counts, int replicates, std::uint64_t seed,
    McOptions base = {}, int jobs = 1) {
  check_candidate(model, observations, m);
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  std::vector<SweepRow> out;
  for (int K : sample_counts) {
    if (K < 1) throw ConfigError("sample counts must be >= 1");
    McOptions o = base;
    o.mc_samples = K;
    std::vector<IGEstimate> est(replicates);
    parallel_for(static_cast<std::size_t>(replicates), jobs, [&](std::size_t r) {
      est[r] = estimate_ig_mc(model, observations, m, o,
                              derive_seed(seed, {std::uint64_t(K), r}));
    });
    std::vector<double> v, se;
    for (const auto& e : est) {
      v.push_back(e.value);
      se.push_back(e.std_error);
    }
    const MeanSd ms = mean_sd(v);
    out.push_back({K, replicates, ms.mean, ms.sd,
                   ms.sd / std::sqrt(static_cast<double>(replicates)),
                   mean_sd(se).mean});
  }
  return out;
}

}  // namespace mhdp
