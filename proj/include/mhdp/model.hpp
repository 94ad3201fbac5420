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

// Model configuration, training and the frozen trained model.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mhdp/corpus.hpp"
#include "mhdp/corpus_io.hpp"
#include "mhdp/crf.hpp"
#include "mhdp/error.hpp"
#include "mhdp/json_util.hpp"
#include "mhdp/rng.hpp"

namespace mhdp {

inline constexpr double kDefaultAlpha0 = 0.1;

struct ModelConfig {
  double lambda = 1.0;
  double gamma = 1.0;
  // Per modality index. Empty means: alpha0 mirrors the dataset's recorded
  // generation alpha (kDefaultAlpha0 when absent) and weights mirror the
  // modality specs.
  std::vector<double> alpha0;
  std::vector<double> weights;
  int train_sweeps = 100;
  int recog_sweeps = 50;
  int recog_burnin = 10;
  bool recog_new_dishes = true;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Fills alpha0/weights for the given modalities and checks every invariant.
inline ModelConfig resolve(ModelConfig c,
                           const std::vector<ModalitySpec>& modalities) {
  const std::size_t M = modalities.size();
  if (c.alpha0.empty()) {
    for (const auto& s : modalities) {
      c.alpha0.push_back(s.alpha0 > 0.0 ? s.alpha0 : kDefaultAlpha0);
    }
  }
  if (c.weights.empty()) {
    for (const auto& s : modalities) c.weights.push_back(s.weight);
  }
  if (c.alpha0.size() != M || c.weights.size() != M) {
    throw ConfigError("alpha0/weights must list one value per modality");
  }
  if (!(c.lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (!(c.gamma > 0.0)) throw ConfigError("gamma must be > 0");
  for (std::size_t m = 0; m < M; ++m) {
    if (!(c.alpha0[m] > 0.0)) {
      throw ConfigError("alpha0 of modality " + std::to_string(m + 1) +
                        " must be > 0");
    }
    if (!(c.weights[m] >= 0.0)) {
      throw ConfigError("weight of modality " + std::to_string(m + 1) +
                        " must be >= 0");
    }
  }
  if (c.train_sweeps < 0) throw ConfigError("train_sweeps must be >= 0");
  if (c.recog_burnin < 0 || c.recog_burnin >= c.recog_sweeps) {
    throw ConfigError("need 0 <= recog_burnin < recog_sweeps");
  }
  return c;
}

inline Hyper make_hyper(const ModelConfig& c,
                        const std::vector<ModalitySpec>& modalities,
                        bool allow_new_dishes) {
  Hyper h;
  h.lambda = c.lambda;
  h.gamma = c.gamma;
  h.alpha = c.alpha0;
  h.weight = c.weights;
  for (const auto& s : modalities) h.dim.push_back(s.dimension);
  h.allow_new_dishes = allow_new_dishes;
  return h;
}

// Tokens of the given observations in canonical order: modality ascending,
// then feature ascending, each feature repeated by its count.
inline std::vector<Token> expand_tokens(const ObjectRecord& o) {
  std::vector<Token> tokens;
  for (const auto& [m, bof] : o.observations) {
    for (std::size_t x = 0; x < bof.size(); ++x) {
      for (int c = 0; c < bof[x]; ++c) {
        tokens.push_back({static_cast<int>(m), static_cast<int>(x), -1});
      }
    }
  }
  return tokens;
}

class TrainedModel {
 public:
  TrainedModel() = default;

  // `state` must hold the training restaurants and no frozen base.
  TrainedModel(ModelConfig config, std::vector<ModalitySpec> modalities,
               CrfState state)
      : config_(resolve(std::move(config), modalities)),
        modalities_(std::move(modalities)),
        state_(std::move(state)) {
    if (state_.frozen_dishes() != 0) {
      throw ContractError("a trained state cannot carry a frozen base");
    }
    state_.check_invariants();
    precompute();
  }

  const ModelConfig& config() const { return config_; }
  const std::vector<ModalitySpec>& modalities() const { return modalities_; }
  std::size_t num_modalities() const { return modalities_.size(); }
  const CrfState& frozen() const { return state_; }
  int num_topics() const { return state_.num_dishes(); }
  long total_tables() const { return state_.total_tables(); }

  Hyper hyper(bool allow_new_dishes) const {
    return make_hyper(config_, modalities_, allow_new_dishes);
  }

  // Base predictive f_k(x) for trained topic k; k == num_topics() is the
  // empty topic.
  double predictive(int k, std::size_t m, int x) const {
    if (k == num_topics()) return 1.0 / modalities_[m].dimension;
    return pred_[static_cast<std::size_t>(k) * state_.feature_space() +
                 state_.flat(static_cast<int>(m), x)];
  }

  // sum_k M_k f_k(x) over trained topics.
  double table_weighted_predictive(std::size_t m, int x) const {
    return mixed_[state_.flat(static_cast<int>(m), x)];
  }

  // Weighted token mass sum_m w^m N^m_k of each trained topic.
  const std::vector<double>& topic_mass() const { return mass_; }

  friend bool operator==(const TrainedModel& a, const TrainedModel& b) {
    // Token order inside a restaurant is not part of the model.
    if (!(a.config_ == b.config_ && a.modalities_ == b.modalities_ &&
          a.state_.dishes() == b.state_.dishes() &&
          a.state_.num_restaurants() == b.state_.num_restaurants())) {
      return false;
    }
    for (int j = 0; j < a.state_.num_restaurants(); ++j) {
      const Restaurant& x = a.state_.restaurant(j);
      const Restaurant& y = b.state_.restaurant(j);
      if (x.object_id != y.object_id || x.tables != y.tables) return false;
    }
    return true;
  }

 private:
  void precompute() {
    const int K = num_topics();
    const std::size_t F = state_.feature_space();
    pred_.assign(static_cast<std::size_t>(K) * F, 0.0);
    mixed_.assign(F, 0.0);
    mass_.assign(K, 0.0);
    for (int k = 0; k < K; ++k) {
      const DishStats& d = state_.dish(k);
      for (std::size_t m = 0; m < modalities_.size(); ++m) {
        mass_[k] += config_.weights[m] * d.totals[m];
        for (int x = 0; x < modalities_[m].dimension; ++x) {
          const double p = state_.predictive(k, static_cast<int>(m), x);
          const int f = state_.flat(static_cast<int>(m), x);
          pred_[static_cast<std::size_t>(k) * F + f] = p;
          mixed_[f] += d.tables * p;
        }
      }
    }
  }

  ModelConfig config_;
  std::vector<ModalitySpec> modalities_;
  CrfState state_;
  std::vector<double> pred_;
  std::vector<double> mixed_;
  std::vector<double> mass_;
};

struct TrainProgress {
  int sweep = 0;
  double log_likelihood = 0.0;
  int num_topics = 0;
};

inline TrainedModel train(
    const Dataset& data, const ModelConfig& config, std::uint64_t seed,
    const std::function<void(const TrainProgress&)>& progress = {}) {
  validate(data);
  if (data.objects.empty()) throw ConfigError("cannot train on an empty dataset");
  const ModelConfig c = resolve(config, data.modalities);
  CrfState state(make_hyper(c, data.modalities, true));
  for (const ObjectRecord& o : data.objects) {
    state.add_restaurant(o.object_id, expand_tokens(o));
  }
  Rng rng(derive_seed(seed, {0x747261696eULL}));
  for (int j = 0; j < state.num_restaurants(); ++j) state.seat_sequential(j, rng);
  for (int s = 0; s < c.train_sweeps; ++s) {
    state.sweep_all(rng);
    if (progress) progress({s + 1, state.log_likelihood(), state.num_dishes()});
  }
  return TrainedModel(c, data.modalities, std::move(state));
}

// Predictive probability of feature x of modality m under trained topic k
// (k == num_topics() is the empty topic).
inline double predictive_token_prob(const TrainedModel& model, int k,
                                    std::size_t m, int x) {
  if (m >= model.num_modalities()) {
    throw ConfigError("unknown modality " + std::to_string(m + 1));
  }
  if (k < 0 || k > model.num_topics()) {
    throw ContractError("unknown topic " + std::to_string(k));
  }
  if (x < 0 || x >= model.modalities()[m].dimension) {
    throw DimensionError("feature index out of range");
  }
  return model.predictive(k, m, x);
}

// Category posterior of training object j under the frozen seating, with
// one slot per trained topic.
inline std::vector<double> training_category_posterior(const TrainedModel& model,
                                                       int j) {
  const Restaurant& r = model.frozen().restaurant(j);
  std::vector<double> p(model.num_topics(), 0.0);
  for (const Table& t : r.tables) p[t.dish] += t.mass;
  normalize(p);
  return p;
}

inline int index_of_max(const std::vector<double>& p) {
  int best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = static_cast<int>(i);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Snapshot format.

inline Json config_to_json(const ModelConfig& c) {
  Json j;
  j["lambda"] = c.lambda;
  j["gamma"] = c.gamma;
  j["alpha0"] = c.alpha0;
  j["weights"] = c.weights;
  j["train_sweeps"] = c.train_sweeps;
  j["recog_sweeps"] = c.recog_sweeps;
  j["recog_burnin"] = c.recog_burnin;
  j["recog_new_dishes"] = c.recog_new_dishes;
  return j;
}

inline ModelConfig config_from_json(const Json& j, const std::string& where) {
  ModelConfig c;
  c.lambda = get_field<double>(j, "lambda", where);
  c.gamma = get_field<double>(j, "gamma", where);
  c.alpha0 = get_field<std::vector<double>>(j, "alpha0", where);
  c.weights = get_field<std::vector<double>>(j, "weights", where);
  c.train_sweeps = get_field<int>(j, "train_sweeps", where);
  c.recog_sweeps = get_field<int>(j, "recog_sweeps", where);
  c.recog_burnin = get_field<int>(j, "recog_burnin", where);
  c.recog_new_dishes = get_field<bool>(j, "recog_new_dishes", where);
  return c;
}

inline Json model_to_json(const TrainedModel& model) {
  const CrfState& s = model.frozen();
  Json j;
  j["meta"] = Json{{"format", "mhdp-model"}, {"rng", std::string(Rng::kAlgorithm)}};
  j["config"] = config_to_json(model.config());
  Json mods = Json::array();
  for (const auto& m : model.modalities()) mods.push_back(modality_to_json(m));
  j["modalities"] = std::move(mods);
  j["num_topics"] = model.num_topics();
  Json dishes = Json::array();
  for (const DishStats& d : s.dishes()) {
    dishes.push_back(Json{{"tables", d.tables}, {"totals", d.totals}});
  }
  j["dishes"] = std::move(dishes);
  Json rest = Json::array();
  for (const Restaurant& r : s.restaurants()) {
    Json tables = Json::array();
    for (const Table& t : r.tables) {
      Json feats = Json::array();
      for (const FeatureCount& f : t.features) {
        feats.push_back(Json::array(
            {f.modality + 1, f.flat - s.flat(f.modality, 0), f.count}));
      }
      tables.push_back(Json{{"dish", t.dish}, {"features", std::move(feats)}});
    }
    rest.push_back(Json{{"object", r.object_id}, {"tables", std::move(tables)}});
  }
  j["restaurants"] = std::move(rest);
  return j;
}

inline TrainedModel model_from_json(const Json& j, const std::string& where) {
  const ModelConfig config =
      config_from_json(get_field<Json>(j, "config", where), where + ".config");
  std::vector<ModalitySpec> mods;
  const Json jm = get_field<Json>(j, "modalities", where);
  for (std::size_t i = 0; i < jm.size(); ++i) {
    mods.push_back(
        modality_from_json(jm[i], where + ".modalities[" + std::to_string(i) + "]"));
    if (mods.back().id != static_cast<int>(i) + 1) {
      throw ConfigError(where + ": modality ids must be 1..M in order");
    }
  }
  const int K = get_field<int>(j, "num_topics", where);
  const ModelConfig resolved = resolve(config, mods);
  CrfState state(make_hyper(resolved, mods, true));
  const Json jr = get_field<Json>(j, "restaurants", where);
  if (!jr.is_array()) throw ParseError(where + ".restaurants: expected array");
  std::vector<Restaurant> seating;
  for (std::size_t r = 0; r < jr.size(); ++r) {
    const std::string rw = where + ".restaurants[" + std::to_string(r) + "]";
    Restaurant rest;
    rest.object_id = get_field<int>(jr[r], "object", rw);
    const Json jt = get_field<Json>(jr[r], "tables", rw);
    if (!jt.is_array()) throw ParseError(rw + ".tables: expected array");
    for (std::size_t t = 0; t < jt.size(); ++t) {
      const std::string tw = rw + ".tables[" + std::to_string(t) + "]";
      Table tab;
      tab.dish = get_field<int>(jt[t], "dish", tw);
      if (tab.dish < 0 || tab.dish >= K) {
        throw ParseError(tw + ": dish out of range");
      }
      const Json jf = get_field<Json>(jt[t], "features", tw);
      if (!jf.is_array() || jf.empty()) {
        throw ParseError(tw + ": features must be a non-empty array");
      }
      for (const Json& f : jf) {
        if (!f.is_array() || f.size() != 3 || !f[0].is_number_integer() ||
            !f[1].is_number_integer() || !f[2].is_number_integer()) {
          throw ParseError(tw + ": features must be [modality, feature, count]");
        }
        const int m = f[0].get<int>() - 1;
        const int x = f[1].get<int>();
        const int c = f[2].get<int>();
        if (m < 0 || m >= static_cast<int>(mods.size()) || x < 0 ||
            x >= mods[m].dimension || c < 1) {
          throw DimensionError(tw + ": feature entry out of range");
        }
        for (int n = 0; n < c; ++n) {
          rest.tokens.push_back({m, x, static_cast<int>(t)});
        }
      }
      rest.tables.push_back(std::move(tab));
    }
    seating.push_back(std::move(rest));
  }
  try {
    state.load_seating(std::move(seating), K);
  } catch (const ContractError& e) {
    throw ParseError(where + ": " + e.what());
  }
  TrainedModel model(resolved, mods, std::move(state));
  const Json jd = get_field<Json>(j, "dishes", where);
  if (!jd.is_array() || static_cast<int>(jd.size()) != K) {
    throw ParseError(where + ".dishes: expected num_topics entries");
  }
  for (int k = 0; k < K; ++k) {
    const std::string dw = where + ".dishes[" + std::to_string(k) + "]";
    if (get_field<int>(jd[k], "tables", dw) != model.frozen().dish(k).tables ||
        get_field<std::vector<int>>(jd[k], "totals", dw) !=
            model.frozen().dish(k).totals) {
      throw ParseError(dw + ": counts disagree with the restaurants");
    }
  }
  return model;
}

inline void save_model(const TrainedModel& model,
                       const std::filesystem::path& path) {
  write_text_file(path, dump_json(model_to_json(model)));
}

inline TrainedModel load_model(const std::filesystem::path& path) {
  const std::string where = path.string();
  return model_from_json(parse_json(read_text_file(path), where), where);
}

}  // namespace mhdp
