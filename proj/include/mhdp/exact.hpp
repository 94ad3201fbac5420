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

// Exhaustive-enumeration oracles for tiny instances. New dishes are never
// created here, and observed modalities must carry unit weight: with
// non-unit weights the weighted seating prior is not exchangeable, so its
// joint has no order-free closed form.

#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mhdp/corpus.hpp"
#include "mhdp/error.hpp"
#include "mhdp/model.hpp"
#include "mhdp/numeric.hpp"
#include "mhdp/recognition.hpp"

namespace mhdp {

inline constexpr int kExactMaxTokens = 6;
inline constexpr int kExactMaxTopics = 3;
inline constexpr int kExactMaxTargetTokens = 6;
inline constexpr int kExactMaxDimension = 3;

struct ExactPosterior {
  std::vector<LatentSample> states;
  std::vector<double> log_prob;
  std::vector<double> prob;
};

// Relabels tables by first appearance in token order. Two samples describe
// the same seating iff their canonical forms are equal.
inline LatentSample canonical(const LatentSample& z) {
  LatentSample c;
  c.observed = z.observed;
  std::vector<int> relabel(z.dish_of_table.size(), -1);
  for (int t : z.table_of_token) {
    if (relabel[t] < 0) {
      relabel[t] = static_cast<int>(c.dish_of_table.size());
      c.dish_of_table.push_back(z.dish_of_table[t]);
      c.table_mass.push_back(z.table_mass[t]);
    }
    c.table_of_token.push_back(relabel[t]);
  }
  return c;
}

inline ExactPosterior exact_posterior(const TrainedModel& model,
                                      const ObjectRecord& obs) {
  check_observations(model, obs);
  const int K = model.num_topics();
  if (K > kExactMaxTopics) {
    throw BudgetError("exact posterior: " + std::to_string(K) +
                      " topics exceed the enumeration budget of " +
                      std::to_string(kExactMaxTopics));
  }
  const std::vector<Token> tokens = expand_tokens(obs);
  const int n = static_cast<int>(tokens.size());
  if (n > kExactMaxTokens) {
    throw BudgetError("exact posterior: " + std::to_string(n) +
                      " observed tokens exceed the enumeration budget of " +
                      std::to_string(kExactMaxTokens));
  }
  const ModelConfig& c = model.config();
  for (const auto& [m, bof] : obs.observations) {
    if (c.weights[m] != 1.0 && bof_total(bof) > 0) {
      throw BudgetError("exact posterior requires unit weights on observed modalities");
    }
  }
  const CrfState& base = model.frozen();
  ExactPosterior out;
  const std::vector<std::size_t> observed = observed_modalities(obs);
  double log_norm_crp = 0.0;
  for (int i = 0; i < n; ++i) log_norm_crp += std::log(c.lambda + i);

  std::vector<int> rgs(n, 0);
  std::vector<int> labels;
  // Scores one complete (partition, labelling).
  auto score = [&](int T) {
    std::vector<int> size(T, 0);
    for (int t : rgs) ++size[t];
    double lp = T * std::log(c.lambda) - log_norm_crp;
    for (int s : size) lp += log_gamma(s);
    std::vector<int> per_dish(K, 0);
    for (int t = 0; t < T; ++t) ++per_dish[labels[t]];
    for (int k = 0; k < K; ++k) {
      lp += log_rising(base.dish(k).tables, 1.0, per_dish[k]);
    }
    lp -= log_rising(static_cast<double>(base.total_tables()), 1.0, T);
    // Emission: the object's counts per (dish, feature) on top of the base.
    std::map<std::tuple<int, int, int>, int> feat;  // (dish, m, flat) -> n
    std::map<std::pair<int, int>, int> tot;         // (dish, m) -> n
    for (int i = 0; i < n; ++i) {
      const int k = labels[rgs[i]];
      const int m = tokens[i].modality;
      ++feat[{k, m, base.flat(m, tokens[i].feature)}];
      ++tot[{k, m}];
    }
    for (const auto& [key, cnt] : feat) {
      const auto [k, m, f] = key;
      lp += log_rising(base.dish(k).counts[f] + c.alpha0[m], 1.0, cnt);
    }
    for (const auto& [key, cnt] : tot) {
      const auto [k, m] = key;
      lp -= log_rising(base.dish(k).totals[m] +
                           model.modalities()[m].dimension * c.alpha0[m],
                       1.0, cnt);
    }
    LatentSample z;
    z.observed = observed;
    z.table_of_token = rgs;
    z.dish_of_table = labels;
    z.table_mass.assign(size.begin(), size.end());
    out.states.push_back(std::move(z));
    out.log_prob.push_back(lp);
  };
  auto label_all = [&](int T) {
    labels.assign(T, 0);
    for (;;) {
      score(T);
      int t = 0;
      while (t < T && ++labels[t] == K) labels[t++] = 0;
      if (t == T) return;
    }
  };
  // Restricted-growth strings enumerate set partitions exactly once.
  auto walk = [&](auto&& self, int i, int T) -> void {
    if (i == n) {
      label_all(T);
      return;
    }
    for (int t = 0; t <= T; ++t) {
      rgs[i] = t;
      self(self, i + 1, std::max(T, t + 1));
    }
  };
  if (n == 0) {
    out.states.push_back({observed, {}, {}, {}});
    out.log_prob.push_back(0.0);
  } else {
    if (K == 0) throw ContractError("exact posterior: model has no topics");
    rgs[0] = 0;
    walk(walk, 1, 1);
  }
  const double z = log_sum_exp(out.log_prob);
  for (double& lp : out.log_prob) {
    lp -= z;
    out.prob.push_back(std::exp(lp));
  }
  return out;
}

// All bags of `total` tokens over `dim` features, lexicographic.
inline std::vector<Bof> enumerate_bofs(int dim, int total) {
  std::vector<Bof> out;
  Bof b(dim, 0);
  auto rec = [&](auto&& self, int x, int left) -> void {
    if (x == dim - 1) {
      b[x] = left;
      out.push_back(b);
      return;
    }
    for (int c = left; c >= 0; --c) {
      b[x] = c;
      self(self, x + 1, left - c);
    }
  };
  if (dim >= 1) rec(rec, 0, total);
  return out;
}

// Caches log P(h | z) for every latent state z and every bag h of each
// modality it is asked about.
class ExactOracle {
 public:
  ExactOracle(const TrainedModel& model, const ObjectRecord& obs)
      : model_(&model), post_(exact_posterior(model, obs)) {
    observed_ = observed_modalities(obs);
  }

  const ExactPosterior& posterior() const { return post_; }
  const std::vector<std::size_t>& observed() const { return observed_; }

  // Modalities not yet observed, ascending.
  std::vector<std::size_t> unobserved() const {
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < model_->num_modalities(); ++m) {
      if (!is_observed(m)) out.push_back(m);
    }
    return out;
  }

  // IG(z; X^A | observations) in nats.
  double ig(std::span<const std::size_t> A) {
    check_targets(A, "exact_ig");
    if (A.empty()) return 0.0;
    const std::size_t Z = post_.states.size();
    std::vector<double> ell(Z), lj(Z);
    double ig = 0.0;
    for_each_combo(A, [&](std::span<const std::size_t> h) {
      fill_ell(A, h, ell);
      for (std::size_t z = 0; z < Z; ++z) lj[z] = post_.log_prob[z] + ell[z];
      const double lh = log_sum_exp(lj);
      for (std::size_t z = 0; z < Z; ++z) {
        ig += std::exp(lj[z]) * (ell[z] - lh);
      }
    });
    return std::max(ig, 0.0);
  }

  // E over X^U of KL(P(z | X^U), P(z | X^A)), U = every unobserved
  // modality, both also conditioned on the observations.
  double expected_final_kl(std::span<const std::size_t> A) {
    const std::vector<std::size_t> U = unobserved();
    check_targets(U, "expected_final_kl");
    std::vector<bool> in_a(model_->num_modalities(), false);
    for (std::size_t m : A) {
      if (is_observed(m)) {
        throw ContractError("candidate modality " + std::to_string(m + 1) +
                            " is already observed");
      }
      if (m >= model_->num_modalities()) {
        throw ConfigError("unknown modality " + std::to_string(m + 1));
      }
      in_a[m] = true;
    }
    const std::size_t Z = post_.states.size();
    std::vector<double> full(Z), part(Z);
    double ekl = 0.0;
    for_each_combo(U, [&](std::span<const std::size_t> h) {
      for (std::size_t z = 0; z < Z; ++z) {
        full[z] = part[z] = post_.log_prob[z];
      }
      for (std::size_t i = 0; i < U.size(); ++i) {
        const ModalityTable& tab = cache_.at(U[i]);
        const double* row = &tab.loglik[h[i] * Z];
        for (std::size_t z = 0; z < Z; ++z) {
          full[z] += row[z];
          if (in_a[U[i]]) part[z] += row[z];
        }
      }
      const double lf = log_sum_exp(full);
      const double lp = log_sum_exp(part);
      double kl = 0.0;
      for (std::size_t z = 0; z < Z; ++z) {
        const double a = full[z] - lf;
        kl += std::exp(a) * (a - (part[z] - lp));
      }
      ekl += std::exp(lf) * kl;
    });
    return std::max(ekl, 0.0);
  }

 private:
  struct ModalityTable {
    std::vector<Bof> bofs;
    std::vector<double> loglik;  // [bof * Z + z]
  };

  bool is_observed(std::size_t m) const {
    for (std::size_t o : observed_) {
      if (o == m) return true;
    }
    return false;
  }

  void check_targets(std::span<const std::size_t> A, const char* what) {
    int total = 0;
    for (std::size_t i = 0; i < A.size(); ++i) {
      const std::size_t m = A[i];
      if (m >= model_->num_modalities()) {
        throw ConfigError(std::string(what) + ": unknown modality " +
                          std::to_string(m + 1));
      }
      if (is_observed(m)) {
        throw ContractError(std::string(what) + ": modality " +
                            std::to_string(m + 1) + " is already observed");
      }
      for (std::size_t k = 0; k < i; ++k) {
        if (A[k] == m) throw ContractError(std::string(what) + ": repeated modality");
      }
      const ModalitySpec& s = model_->modalities()[m];
      if (s.dimension > kExactMaxDimension) {
        throw BudgetError(std::string(what) + ": dimension " +
                          std::to_string(s.dimension) + " exceeds " +
                          std::to_string(kExactMaxDimension));
      }
      total += s.token_count;
    }
    if (total > kExactMaxTargetTokens) {
      throw BudgetError(std::string(what) + ": " + std::to_string(total) +
                        " target tokens exceed " +
                        std::to_string(kExactMaxTargetTokens));
    }
    for (std::size_t m : A) table(m);
  }

  const ModalityTable& table(std::size_t m) {
    auto it = cache_.find(m);
    if (it != cache_.end()) return it->second;
    const ModalitySpec& s = model_->modalities()[m];
    ModalityTable tab;
    tab.bofs = enumerate_bofs(s.dimension, s.token_count);
    const std::size_t Z = post_.states.size();
    tab.loglik.resize(tab.bofs.size() * Z);
    std::vector<double> p(s.dimension);
    for (std::size_t z = 0; z < Z; ++z) {
      const LatentSample& st = post_.states[z];
      modality_predictive(*model_, st.dish_of_table, st.table_mass, m, false, p);
      for (std::size_t h = 0; h < tab.bofs.size(); ++h) {
        const Bof& b = tab.bofs[h];
        double l = log_multinomial_coefficient<int>(b);
        for (int x = 0; x < s.dimension; ++x) {
          if (b[x] > 0) l += b[x] * std::log(p[x]);
        }
        tab.loglik[h * Z + z] = l;
      }
    }
    return cache_.emplace(m, std::move(tab)).first->second;
  }

  void fill_ell(std::span<const std::size_t> A, std::span<const std::size_t> h,
                std::vector<double>& ell) const {
    const std::size_t Z = post_.states.size();
    std::fill(ell.begin(), ell.end(), 0.0);
    for (std::size_t i = 0; i < A.size(); ++i) {
      const double* row = &cache_.at(A[i]).loglik[h[i] * Z];
      for (std::size_t z = 0; z < Z; ++z) ell[z] += row[z];
    }
  }

  template <class Fn>
  void for_each_combo(std::span<const std::size_t> A, Fn&& fn) const {
    std::vector<std::size_t> h(A.size(), 0);
    for (;;) {
      fn(std::span<const std::size_t>(h));
      std::size_t i = 0;
      while (i < A.size() && ++h[i] == cache_.at(A[i]).bofs.size()) h[i++] = 0;
      if (i == A.size()) return;
    }
  }

  const TrainedModel* model_;
  ExactPosterior post_;
  std::vector<std::size_t> observed_;
  std::map<std::size_t, ModalityTable> cache_;
};

inline double exact_ig(const TrainedModel& model, const ObjectRecord& obs,
                       std::span<const std::size_t> target_set) {
  ExactOracle oracle(model, obs);
  return oracle.ig(target_set);
}

inline double expected_final_kl(const TrainedModel& model,
                                const ObjectRecord& obs,
                                std::span<const std::size_t> candidate_set) {
  ExactOracle oracle(model, obs);
  return oracle.expected_final_kl(candidate_set);
}

}  // namespace mhdp
