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

// Chinese restaurant franchise state and the collapsed Gibbs moves.
//
// Counts are kept as integers; the weighted count of modality m is
// w^m * N, computed on use so removing and restoring a token is exact.
// Dishes below frozen_dishes() belong to a trained model and are never
// garbage-collected.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mhdp/error.hpp"
#include "mhdp/numeric.hpp"
#include "mhdp/rng.hpp"

namespace mhdp {

struct Hyper {
  double lambda = 1.0;
  double gamma = 1.0;
  std::vector<double> alpha;   // per modality
  std::vector<double> weight;  // per modality
  std::vector<int> dim;        // per modality
  bool allow_new_dishes = true;

  std::size_t num_modalities() const { return dim.size(); }
};

struct Token {
  int modality = 0;
  int feature = 0;
  int table = -1;  // -1 while unseated
};

struct FeatureCount {
  int modality = 0;
  int flat = 0;  // offset(modality) + feature
  int count = 0;

  friend bool operator==(const FeatureCount&, const FeatureCount&) = default;
};

struct Table {
  int dish = -1;
  int tokens = 0;
  double mass = 0.0;                          // sum_m w^m N^m_jt
  std::vector<FeatureCount> features;         // sorted by flat index
  std::vector<std::pair<int, int>> modality;  // (m, N^m_jt), sorted by m

  friend bool operator==(const Table&, const Table&) = default;
};

struct Restaurant {
  int object_id = 0;
  std::vector<Token> tokens;
  std::vector<Table> tables;

  friend bool operator==(const Restaurant& a, const Restaurant& b) {
    if (a.object_id != b.object_id || a.tables != b.tables ||
        a.tokens.size() != b.tokens.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.tokens.size(); ++i) {
      const Token& x = a.tokens[i];
      const Token& y = b.tokens[i];
      if (x.modality != y.modality || x.feature != y.feature ||
          x.table != y.table) {
        return false;
      }
    }
    return true;
  }
};

struct DishStats {
  int tables = 0;           // M_k
  std::vector<int> counts;  // N^m_{k,x}, flat index
  std::vector<int> totals;  // N^m_k

  friend bool operator==(const DishStats&, const DishStats&) = default;
};

class CrfState {
 public:
  CrfState() = default;

  explicit CrfState(Hyper h) : hyper_(std::move(h)) {
    const std::size_t M = hyper_.dim.size();
    if (hyper_.alpha.size() != M || hyper_.weight.size() != M) {
      throw ConfigError("hyperparameter vectors differ in length");
    }
    if (!(hyper_.lambda > 0.0) || !(hyper_.gamma > 0.0)) {
      throw ConfigError("lambda and gamma must be > 0");
    }
    offset_.resize(M + 1, 0);
    unit_weights_ = true;
    for (std::size_t m = 0; m < M; ++m) {
      if (hyper_.dim[m] < 1) throw ConfigError("dimension must be >= 1");
      if (!(hyper_.alpha[m] > 0.0)) throw ConfigError("alpha0 must be > 0");
      if (!(hyper_.weight[m] >= 0.0)) throw ConfigError("weight must be >= 0");
      offset_[m + 1] = offset_[m] + hyper_.dim[m];
      if (hyper_.weight[m] != 1.0) unit_weights_ = false;
    }
  }

  // Installs trained dishes as a fixed base measure. Must precede any
  // restaurant.
  void set_frozen_dishes(std::vector<DishStats> dishes) {
    if (!restaurants_.empty()) {
      throw ContractError("frozen dishes must be installed on an empty state");
    }
    for (const auto& d : dishes) {
      if (d.tables < 1) throw ContractError("frozen dish without tables");
      if (d.counts.size() != feature_space() ||
          d.totals.size() != hyper_.dim.size()) {
        throw DimensionError("frozen dish count layout mismatch");
      }
    }
    dishes_ = dishes;
    base_ = std::move(dishes);
    total_tables_ = 0;
    for (const auto& d : dishes_) total_tables_ += d.tables;
  }

  const Hyper& hyper() const { return hyper_; }
  std::size_t feature_space() const { return offset_.empty() ? 0 : offset_.back(); }
  int flat(int m, int x) const { return offset_[m] + x; }
  int num_dishes() const { return static_cast<int>(dishes_.size()); }
  int frozen_dishes() const { return static_cast<int>(base_.size()); }
  long total_tables() const { return total_tables_; }
  const std::vector<DishStats>& dishes() const { return dishes_; }
  const DishStats& dish(int k) const { return dishes_[k]; }
  const std::vector<Restaurant>& restaurants() const { return restaurants_; }
  const Restaurant& restaurant(int j) const { return restaurants_[j]; }
  int num_restaurants() const { return static_cast<int>(restaurants_.size()); }

  // Adds a restaurant whose tokens are all unseated.
  int add_restaurant(int object_id, std::vector<Token> tokens) {
    for (Token& t : tokens) {
      if (t.modality < 0 ||
          t.modality >= static_cast<int>(hyper_.dim.size()) ||
          t.feature < 0 || t.feature >= hyper_.dim[t.modality]) {
        throw DimensionError("token outside the declared feature space");
      }
      t.table = -1;
    }
    restaurants_.push_back({object_id, std::move(tokens), {}});
    return static_cast<int>(restaurants_.size()) - 1;
  }

  // Predictive probability of feature x of modality m under dish k, or
  // under an empty dish when k == num_dishes().
  double predictive(int k, int m, int x) const {
    const double a = hyper_.alpha[m];
    const double d = hyper_.dim[m];
    if (k >= num_dishes()) return 1.0 / d;
    const double w = hyper_.weight[m];
    const DishStats& s = dishes_[k];
    return (w * s.counts[flat(m, x)] + a) / (w * s.totals[m] + d * a);
  }

  // Distribution over {existing tables of j, new table} for a token (m, x)
  // that is not currently counted anywhere.
  std::vector<double> table_posterior(int j, int m, int x) const {
    std::vector<double> w;
    std::vector<double> dish_w;
    table_weights(j, m, x, w, dish_w);
    normalize(w);
    return w;
  }

  // Distribution over {existing dishes, new dish} for table t of j, with
  // the table's own tokens and its own table count excluded. The new-dish
  // entry is present only when new dishes are allowed. A dish that would be
  // left without tables gets weight zero (its index would be recycled as
  // the new dish).
  std::vector<double> dish_posterior(int j, int t) const {
    const Table& tab = restaurants_[j].tables[t];
    std::vector<double> lw(static_cast<std::size_t>(num_dishes()) +
                           (hyper_.allow_new_dishes ? 1 : 0));
    for (int k = 0; k < num_dishes(); ++k) {
      const int own = tab.dish == k ? 1 : 0;
      const int mk = dishes_[k].tables - own;
      if (mk <= 0) {
        lw[k] = -std::numeric_limits<double>::infinity();
        continue;
      }
      lw[k] = std::log(static_cast<double>(mk)) + table_log_lik(tab, k, own);
    }
    if (hyper_.allow_new_dishes) {
      lw.back() = std::log(hyper_.gamma) + table_log_lik(tab, -1, 0);
    }
    const double z = log_sum_exp(lw);
    for (double& v : lw) v = std::exp(v - z);
    return lw;
  }

  // Seats every unseated token of j in a random order, each drawn from its
  // conditional given the tokens seated so far.
  void seat_sequential(int j, Rng& rng) {
    Restaurant& r = restaurants_[j];
    std::vector<int> order(r.tokens.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    for (int i : order) {
      if (r.tokens[i].table < 0) sample_token(j, i, rng);
    }
  }

  void resample_token(int j, int i, Rng& rng) {
    remove_token(j, i);
    sample_token(j, i, rng);
  }

  void resample_table(int j, int t, Rng& rng) {
    detach_table(j, t);
    std::vector<double>& lw = scratch_;
    lw.assign(static_cast<std::size_t>(num_dishes()) +
                  (hyper_.allow_new_dishes ? 1 : 0),
              0.0);
    const Table& tab = restaurants_[j].tables[t];
    for (int k = 0; k < num_dishes(); ++k) {
      lw[k] = std::log(static_cast<double>(dishes_[k].tables)) +
              table_log_lik(tab, k, 0);
    }
    if (hyper_.allow_new_dishes) {
      lw.back() = std::log(hyper_.gamma) + table_log_lik(tab, -1, 0);
    }
    if (lw.empty()) throw ContractError("no dish available for table");
    attach_table(j, t, static_cast<int>(rng.categorical_log(lw)));
  }

  // One Gibbs sweep over restaurant j: every token, then every table.
  void sweep(int j, Rng& rng) {
    const int n = static_cast<int>(restaurants_[j].tokens.size());
    for (int i = 0; i < n; ++i) resample_token(j, i, rng);
    const int T = static_cast<int>(restaurants_[j].tables.size());
    for (int t = 0; t < T; ++t) resample_table(j, t, rng);
  }

  void sweep_all(Rng& rng) {
    for (int j = 0; j < num_restaurants(); ++j) sweep(j, rng);
#ifndef NDEBUG
    check_invariants();
#endif
  }

  // Removes token i of j from its table and from the dish counts. An
  // emptied table is deleted and later table indices shift down.
  void remove_token(int j, int i) {
    Restaurant& r = restaurants_[j];
    Token& tok = r.tokens[i];
    const int t = tok.table;
    if (t < 0) throw ContractError("token is not seated");
    Table& tab = r.tables[t];
    const int f = flat(tok.modality, tok.feature);
    bump_table(tab, tok.modality, f, -1);
    if (tab.dish >= 0) {
      DishStats& d = dishes_[tab.dish];
      --d.counts[f];
      --d.totals[tok.modality];
    }
    tok.table = -1;
    if (tab.tokens == 0) delete_table(j, t);
  }

  // Seats token i of j at table t; t == tables.size() opens a new table
  // serving dish k (k == num_dishes() opens a new dish).
  void add_token(int j, int i, int t, int k = -1) {
    Restaurant& r = restaurants_[j];
    Token& tok = r.tokens[i];
    if (tok.table >= 0) throw ContractError("token already seated");
    if (t == static_cast<int>(r.tables.size())) {
      if (k < 0 || k > num_dishes()) throw ContractError("bad dish for table");
      r.tables.emplace_back();
      attach_table(j, t, k);
    }
    Table& tab = r.tables[t];
    const int f = flat(tok.modality, tok.feature);
    bump_table(tab, tok.modality, f, +1);
    DishStats& d = dishes_[tab.dish];
    ++d.counts[f];
    ++d.totals[tok.modality];
    tok.table = t;
  }

  // Takes table t's tokens and table count out of its dish. A non-frozen
  // dish left without tables is deleted.
  void detach_table(int j, int t) {
    Table& tab = restaurants_[j].tables[t];
    const int k = tab.dish;
    if (k < 0) throw ContractError("table already detached");
    DishStats& d = dishes_[k];
    for (const auto& fc : tab.features) d.counts[fc.flat] -= fc.count;
    for (const auto& [m, n] : tab.modality) d.totals[m] -= n;
    --d.tables;
    --total_tables_;
    tab.dish = -1;
    if (d.tables == 0) {
      if (k < frozen_dishes()) throw ContractError("frozen dish emptied");
      delete_dish(k);
    }
  }

  void attach_table(int j, int t, int k) {
    if (k == num_dishes()) {
      dishes_.push_back({0, std::vector<int>(feature_space(), 0),
                         std::vector<int>(hyper_.dim.size(), 0)});
    }
    Table& tab = restaurants_[j].tables[t];
    DishStats& d = dishes_[k];
    for (const auto& fc : tab.features) d.counts[fc.flat] += fc.count;
    for (const auto& [m, n] : tab.modality) d.totals[m] += n;
    ++d.tables;
    ++total_tables_;
    tab.dish = k;
  }

  // Replaces all restaurants with a complete seating (every token names
  // its table, every table its dish) and rebuilds the counts.
  void load_seating(std::vector<Restaurant> restaurants, int num_dishes) {
    if (!base_.empty()) throw ContractError("cannot load over a frozen base");
    if (num_dishes < 0) throw ContractError("negative dish count");
    dishes_.assign(num_dishes, {0, std::vector<int>(feature_space(), 0),
                                std::vector<int>(hyper_.dim.size(), 0)});
    total_tables_ = 0;
    restaurants_ = std::move(restaurants);
    for (Restaurant& r : restaurants_) {
      for (Table& tab : r.tables) {
        if (tab.dish < 0 || tab.dish >= num_dishes) {
          fail(r, "table serves a missing dish");
        }
        tab = Table{tab.dish, 0, 0.0, {}, {}};
        ++dishes_[tab.dish].tables;
        ++total_tables_;
      }
      for (const Token& tok : r.tokens) {
        if (tok.modality < 0 ||
            tok.modality >= static_cast<int>(hyper_.dim.size()) ||
            tok.feature < 0 || tok.feature >= hyper_.dim[tok.modality]) {
          fail(r, "token outside the declared feature space");
        }
        if (tok.table < 0 || tok.table >= static_cast<int>(r.tables.size())) {
          fail(r, "token seated at a missing table");
        }
        Table& tab = r.tables[tok.table];
        const int f = flat(tok.modality, tok.feature);
        bump_table(tab, tok.modality, f, +1);
        ++dishes_[tab.dish].counts[f];
        ++dishes_[tab.dish].totals[tok.modality];
      }
    }
    check_invariants();
  }

  // log P(data | dish assignments), collapsed over emissions. Frozen base
  // counts are included.
  double log_likelihood() const {
    double s = 0.0;
    for (const DishStats& d : dishes_) {
      for (std::size_t m = 0; m < hyper_.dim.size(); ++m) {
        const double w = hyper_.weight[m];
        const double a = hyper_.alpha[m];
        for (int x = 0; x < hyper_.dim[m]; ++x) {
          s += log_rising(a, w, d.counts[flat(static_cast<int>(m), x)]);
        }
        s -= log_rising(hyper_.dim[m] * a, w, d.totals[m]);
      }
    }
    return s;
  }

  // Recounts everything from the seating and throws ContractError on the
  // first mismatch.
  void check_invariants() const {
    std::vector<DishStats> expect(dishes_.size());
    long tables = 0;
    for (std::size_t k = 0; k < dishes_.size(); ++k) {
      if (k < base_.size()) {
        expect[k] = base_[k];
      } else {
        expect[k] = {0, std::vector<int>(feature_space(), 0),
                     std::vector<int>(hyper_.dim.size(), 0)};
      }
      tables += expect[k].tables;
    }
    for (const Restaurant& r : restaurants_) {
      std::vector<Table> rebuilt(r.tables.size());
      for (std::size_t t = 0; t < r.tables.size(); ++t) {
        rebuilt[t].dish = r.tables[t].dish;
      }
      for (const Token& tok : r.tokens) {
        if (tok.table < 0 || tok.table >= static_cast<int>(r.tables.size())) {
          fail(r, "token seated at a missing table");
        }
        bump_table(rebuilt[tok.table], tok.modality,
                   flat(tok.modality, tok.feature), +1);
      }
      for (std::size_t t = 0; t < r.tables.size(); ++t) {
        const Table& tab = r.tables[t];
        if (tab.tokens < 1) fail(r, "empty table");
        if (!(rebuilt[t] == tab)) fail(r, "table counts out of sync");
        if (tab.dish < 0 || tab.dish >= num_dishes()) {
          fail(r, "table serves a missing dish");
        }
        DishStats& d = expect[tab.dish];
        ++d.tables;
        ++tables;
        for (const auto& fc : tab.features) d.counts[fc.flat] += fc.count;
        for (const auto& [m, n] : tab.modality) d.totals[m] += n;
      }
    }
    if (tables != total_tables_) {
      throw ContractError("total table count out of sync");
    }
    for (std::size_t k = 0; k < dishes_.size(); ++k) {
      if (!(expect[k] == dishes_[k])) {
        throw ContractError("dish " + std::to_string(k) + " out of sync");
      }
      if (dishes_[k].tables < 1) {
        throw ContractError("dish " + std::to_string(k) + " has no table");
      }
      for (std::size_t m = 0; m < hyper_.dim.size(); ++m) {
        long s = 0;
        for (int x = 0; x < hyper_.dim[m]; ++x) {
          s += dishes_[k].counts[offset_[m] + x];
        }
        if (s != dishes_[k].totals[m]) {
          throw ContractError("dish total out of sync");
        }
      }
    }
  }

  friend bool operator==(const CrfState& a, const CrfState& b) {
    return a.dishes_ == b.dishes_ && a.restaurants_ == b.restaurants_ &&
           a.total_tables_ == b.total_tables_ && a.base_ == b.base_;
  }

 private:
  [[noreturn]] static void fail(const Restaurant& r, const char* what) {
    throw ContractError("restaurant of object " + std::to_string(r.object_id) +
                        ": " + what);
  }

  double table_mass(const Table& tab) const {
    if (unit_weights_) return tab.tokens;
    double s = 0.0;
    for (const auto& [m, n] : tab.modality) s += hyper_.weight[m] * n;
    return s;
  }

  void bump_table(Table& tab, int m, int f, int delta) const {
    auto fit = std::lower_bound(
        tab.features.begin(), tab.features.end(), f,
        [](const FeatureCount& a, int b) { return a.flat < b; });
    if (fit == tab.features.end() || fit->flat != f) {
      fit = tab.features.insert(fit, {m, f, 0});
    }
    fit->count += delta;
    if (fit->count == 0) tab.features.erase(fit);
    auto mit = std::lower_bound(
        tab.modality.begin(), tab.modality.end(), m,
        [](const std::pair<int, int>& a, int b) { return a.first < b; });
    if (mit == tab.modality.end() || mit->first != m) {
      mit = tab.modality.insert(mit, {m, 0});
    }
    mit->second += delta;
    if (mit->second == 0) tab.modality.erase(mit);
    tab.tokens += delta;
    tab.mass = table_mass(tab);
  }

  // log P(X_t | X_k) with `own` copies of the table removed from dish k's
  // counts (0 or 1); k < 0 is an empty dish.
  double table_log_lik(const Table& tab, int k, int own) const {
    double s = 0.0;
    for (const auto& fc : tab.features) {
      const double w = hyper_.weight[fc.modality];
      const double base =
          k < 0 ? 0.0 : dishes_[k].counts[fc.flat] - own * fc.count;
      s += log_rising(w * base + hyper_.alpha[fc.modality], w, fc.count);
    }
    for (const auto& [m, n] : tab.modality) {
      const double w = hyper_.weight[m];
      const double base = k < 0 ? 0.0 : dishes_[k].totals[m] - own * n;
      s -= log_rising(w * base + hyper_.dim[m] * hyper_.alpha[m], w, n);
    }
    return s;
  }

  // Unnormalized table weights (existing..., new) and the dish weights
  // used to pick the dish of a new table (existing..., [new]).
  void table_weights(int j, int m, int x, std::vector<double>& w,
                     std::vector<double>& dish_w) const {
    const Restaurant& r = restaurants_[j];
    const int K = num_dishes();
    dish_w.assign(static_cast<std::size_t>(K) +
                      (hyper_.allow_new_dishes ? 1 : 0),
                  0.0);
    double g = 0.0;
    for (int k = 0; k < K; ++k) {
      dish_w[k] = dishes_[k].tables * predictive(k, m, x);
      g += dish_w[k];
    }
    double denom = static_cast<double>(total_tables_);
    if (hyper_.allow_new_dishes) {
      dish_w[K] = hyper_.gamma / hyper_.dim[m];
      g += dish_w[K];
      denom += hyper_.gamma;
    }
    if (!(denom > 0.0)) throw ContractError("no dish available for a new table");
    g /= denom;
    w.resize(r.tables.size() + 1);
    for (std::size_t t = 0; t < r.tables.size(); ++t) {
      w[t] = r.tables[t].mass * predictive(r.tables[t].dish, m, x);
    }
    w.back() = hyper_.lambda * g;
  }

  void sample_token(int j, int i, Rng& rng) {
    const Token& tok = restaurants_[j].tokens[i];
    table_weights(j, tok.modality, tok.feature, scratch_, dish_scratch_);
    const int t = static_cast<int>(rng.categorical(scratch_));
    int k = -1;
    if (t == static_cast<int>(restaurants_[j].tables.size())) {
      k = static_cast<int>(rng.categorical(dish_scratch_));
    }
    add_token(j, i, t, k);
  }

  void delete_table(int j, int t) {
    Restaurant& r = restaurants_[j];
    const int k = r.tables[t].dish;
    if (k >= 0) {
      DishStats& d = dishes_[k];
      --d.tables;
      --total_tables_;
      if (d.tables == 0) {
        if (k < frozen_dishes()) throw ContractError("frozen dish emptied");
        delete_dish(k);
      }
    }
    r.tables.erase(r.tables.begin() + t);
    for (Token& tok : r.tokens) {
      if (tok.table > t) --tok.table;
    }
  }

  void delete_dish(int k) {
    dishes_.erase(dishes_.begin() + k);
    for (Restaurant& r : restaurants_) {
      for (Table& tab : r.tables) {
        if (tab.dish > k) --tab.dish;
      }
    }
  }

  Hyper hyper_;
  std::vector<int> offset_;
  bool unit_weights_ = true;
  std::vector<DishStats> base_;
  std::vector<DishStats> dishes_;
  std::vector<Restaurant> restaurants_;
  long total_tables_ = 0;
  std::vector<double> scratch_;
  std::vector<double> dish_scratch_;
};

}  // namespace mhdp
