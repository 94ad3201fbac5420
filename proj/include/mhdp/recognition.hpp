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

// Recognition of a new object against a frozen model, and the cross-modal
// predictive used by the information-gain estimators.
//
// Given a latent sample z (the seating of the observed tokens), the tokens
// of an unobserved modality are modelled as i.i.d. draws from the one-step
// franchise predictive p_z: join table t with weight equal to its mass and
// emit from its dish, or open a table with weight lambda and draw its dish
// from the dish prior. Conditioning on z leaves the training counts of the
// unobserved modality untouched, so p_z is fixed while a bag is generated.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mhdp/corpus.hpp"
#include "mhdp/crf.hpp"
#include "mhdp/error.hpp"
#include "mhdp/model.hpp"
#include "mhdp/numeric.hpp"
#include "mhdp/rng.hpp"

namespace mhdp {

struct RecognitionOptions {
  int sweeps = 50;
  int burnin = 10;
  bool allow_new_dishes = true;

  static RecognitionOptions from(const ModelConfig& c) {
    return {c.recog_sweeps, c.recog_burnin, c.recog_new_dishes};
  }
};

// Seating of one target object's observed tokens. Token order is the
// canonical order of expand_tokens(); dishes >= the model's topic count are
// novel topics local to this sample.
struct LatentSample {
  std::vector<std::size_t> observed;
  std::vector<int> table_of_token;
  std::vector<int> dish_of_table;
  std::vector<double> table_mass;

  friend bool operator==(const LatentSample&, const LatentSample&) = default;
};

struct RecognitionState {
  std::vector<double> category_posterior;  // trained topics, then "novel"
  std::vector<LatentSample> latent_samples;
  std::vector<std::size_t> observed_set;
};

inline std::vector<std::size_t> observed_modalities(const ObjectRecord& o) {
  std::vector<std::size_t> out;
  for (const auto& [m, bof] : o.observations) out.push_back(m);
  return out;
}

inline void check_observations(const TrainedModel& model,
                               const ObjectRecord& obs) {
  for (const auto& [m, bof] : obs.observations) {
    if (m >= model.num_modalities()) {
      throw ConfigError("modality " + std::to_string(m + 1) +
                        " is not declared in the model");
    }
    if (static_cast<int>(bof.size()) != model.modalities()[m].dimension) {
      throw DimensionError("modality " + std::to_string(m + 1) +
                           ": histogram length " + std::to_string(bof.size()) +
                           " != dimension " +
                           std::to_string(model.modalities()[m].dimension));
    }
    for (int c : bof) {
      if (c < 0) throw DimensionError("negative feature count");
    }
  }
}

// Gibbs chain over one object's tokens with the trained counts as a fixed
// base measure.
class LatentChain {
 public:
  LatentChain(const TrainedModel& model, const ObjectRecord& obs,
              std::uint64_t seed, bool allow_new_dishes)
      : model_(&model),
        observed_(observed_modalities(obs)),
        state_(model.hyper(allow_new_dishes)),
        rng_(seed) {
    check_observations(model, obs);
    state_.set_frozen_dishes(model.frozen().dishes());
    state_.add_restaurant(obs.object_id, expand_tokens(obs));
    state_.seat_sequential(0, rng_);
  }

  void sweep(int n = 1) {
    for (int s = 0; s < n; ++s) state_.sweep(0, rng_);
  }

  const Restaurant& restaurant() const { return state_.restaurant(0); }
  const CrfState& state() const { return state_; }
  const std::vector<std::size_t>& observed() const { return observed_; }
  bool allow_new_dishes() const { return state_.hyper().allow_new_dishes; }

  LatentSample sample() const {
    const Restaurant& r = restaurant();
    LatentSample s;
    s.observed = observed_;
    s.table_of_token.reserve(r.tokens.size());
    for (const Token& t : r.tokens) s.table_of_token.push_back(t.table);
    for (const Table& t : r.tables) {
      s.dish_of_table.push_back(t.dish);
      s.table_mass.push_back(t.mass);
    }
    return s;
  }

 private:
  const TrainedModel* model_;
  std::vector<std::size_t> observed_;
  CrfState state_;
  Rng rng_;
};

// Normalized weighted topic masses, with a zero "novel" slot.
inline std::vector<double> topic_prior(const TrainedModel& model) {
  std::vector<double> p(model.topic_mass());
  p.push_back(0.0);
  if (normalize(p) <= 0.0) {
    // Zero weights everywhere: fall back to table counts.
    for (int k = 0; k < model.num_topics(); ++k) {
      p[k] = model.frozen().dish(k).tables;
    }
    normalize(p);
  }
  return p;
}

// Category posterior from table dishes and masses; novel topics pool into
// the last slot.
inline std::vector<double> category_posterior(const TrainedModel& model,
                                              std::span<const int> dishes,
                                              std::span<const double> masses) {
  const int K = model.num_topics();
  std::vector<double> p(static_cast<std::size_t>(K) + 1, 0.0);
  for (std::size_t t = 0; t < dishes.size(); ++t) {
    p[std::min(dishes[t], K)] += masses[t];
  }
  if (normalize(p) <= 0.0) return topic_prior(model);
  return p;
}

inline std::vector<double> category_posterior(const TrainedModel& model,
                                              const LatentSample& z) {
  return category_posterior(model, z.dish_of_table, z.table_mass);
}

// p_z over the features of modality m, written into out.
inline void modality_predictive(const TrainedModel& model,
                                std::span<const int> dishes,
                                std::span<const double> masses, std::size_t m,
                                bool allow_new_dishes,
                                std::span<double> out) {
  const ModelConfig& c = model.config();
  const int d = model.modalities()[m].dimension;
  const int K = model.num_topics();
  double n = 0.0;
  for (double w : masses) n += w;
  double g_denom = static_cast<double>(model.total_tables()) +
                   static_cast<double>(dishes.size()) +
                   (allow_new_dishes ? c.gamma : 0.0);
  const double inv_d = 1.0 / d;
  for (int x = 0; x < d; ++x) {
    double g = model.table_weighted_predictive(m, x) +
               (allow_new_dishes ? c.gamma * inv_d : 0.0);
    double tables = 0.0;
    for (std::size_t t = 0; t < dishes.size(); ++t) {
      const double f = dishes[t] < K ? model.predictive(dishes[t], m, x) : inv_d;
      g += f;
      tables += masses[t] * f;
    }
    out[x] = (tables + c.lambda * g / g_denom) / (n + c.lambda);
  }
}

inline std::vector<double> modality_predictive(const TrainedModel& model,
                                               const LatentSample& z,
                                               std::size_t m,
                                               bool allow_new_dishes) {
  if (m >= model.num_modalities()) {
    throw ConfigError("unknown modality " + std::to_string(m + 1));
  }
  std::vector<double> p(model.modalities()[m].dimension);
  modality_predictive(model, z.dish_of_table, z.table_mass, m,
                      allow_new_dishes, p);
  return p;
}

inline void require_unobserved(const LatentSample& z, std::size_t m) {
  for (std::size_t o : z.observed) {
    if (o == m) {
      throw ContractError("modality " + std::to_string(m + 1) +
                          " is already observed");
    }
  }
}

// Draws the modality-m bag of token_count(m) features given z.
inline Bof sample_modality(const TrainedModel& model, const LatentSample& z,
                           std::size_t m, Rng& rng,
                           bool allow_new_dishes = true) {
  require_unobserved(z, m);
  const std::vector<double> p = modality_predictive(model, z, m, allow_new_dishes);
  return draw_bof(p, model.modalities()[m].token_count, rng);
}

// log P(X^m = bof | z), including the multinomial coefficient so that the
// probabilities of all bags of a given size sum to one.
inline double joint_modality_likelihood(const TrainedModel& model,
                                        const LatentSample& z, std::size_t m,
                                        const Bof& bof,
                                        bool allow_new_dishes = true) {
  if (m >= model.num_modalities()) {
    throw ConfigError("unknown modality " + std::to_string(m + 1));
  }
  if (static_cast<int>(bof.size()) != model.modalities()[m].dimension) {
    throw DimensionError("bag length does not match the modality dimension");
  }
  if (bof_total(bof) == 0) return 0.0;
  const std::vector<double> p = modality_predictive(model, z, m, allow_new_dishes);
  double s = log_multinomial_coefficient<int>(bof);
  for (std::size_t x = 0; x < bof.size(); ++x) {
    if (bof[x] > 0) s += bof[x] * std::log(p[x]);
  }
  return s;
}

// One latent state after options.burnin sweeps of a fresh chain.
inline LatentSample sample_latent(const TrainedModel& model,
                                  const ObjectRecord& obs, Rng& rng,
                                  const RecognitionOptions& options) {
  LatentChain chain(model, obs, rng.next_u64(), options.allow_new_dishes);
  chain.sweep(std::max(options.burnin, 1));
  return chain.sample();
}

inline LatentSample sample_latent(const TrainedModel& model,
                                  const ObjectRecord& obs, Rng& rng) {
  return sample_latent(model, obs, rng, RecognitionOptions::from(model.config()));
}

inline RecognitionState recognize(const TrainedModel& model,
                                  const ObjectRecord& obs, std::uint64_t seed,
                                  const RecognitionOptions& options) {
  check_observations(model, obs);
  RecognitionState out;
  out.observed_set = observed_modalities(obs);
  long tokens = 0;
  for (const auto& [m, bof] : obs.observations) tokens += bof_total(bof);
  if (tokens == 0) {
    out.category_posterior = topic_prior(model);
    return out;
  }
  if (options.burnin < 0 || options.burnin >= options.sweeps) {
    throw ConfigError("need 0 <= burnin < sweeps");
  }
  LatentChain chain(model, obs, seed, options.allow_new_dishes);
  out.category_posterior.assign(static_cast<std::size_t>(model.num_topics()) + 1,
                                0.0);
  for (int s = 0; s < options.sweeps; ++s) {
    chain.sweep();
    if (s < options.burnin) continue;
    LatentSample z = chain.sample();
    const std::vector<double> p = category_posterior(model, z);
    for (std::size_t k = 0; k < p.size(); ++k) out.category_posterior[k] += p[k];
    out.latent_samples.push_back(std::move(z));
  }
  normalize(out.category_posterior);
  return out;
}

inline RecognitionState recognize(const TrainedModel& model,
                                  const ObjectRecord& obs, std::uint64_t seed) {
  return recognize(model, obs, seed, RecognitionOptions::from(model.config()));
}

}  // namespace mhdp
