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

// Builders for small hand-made models and observations.

#pragma once

#include <array>
#include <map>
#include <vector>

#include "mhdp/corpus.hpp"
#include "mhdp/crf.hpp"
#include "mhdp/model.hpp"

namespace mhdp::testing {

struct ToyTable {
  int restaurant = 0;
  int dish = 0;
  std::vector<std::array<int, 3>> features;  // (modality index, feature, count)
};

inline std::vector<ModalitySpec> modalities(const std::vector<int>& dims,
                                            const std::vector<int>& tokens) {
  std::vector<ModalitySpec> out;
  for (std::size_t m = 0; m < dims.size(); ++m) {
    out.push_back({static_cast<int>(m) + 1, dims[m], tokens[m], 1.0, 0.0});
  }
  return out;
}

// A trained model whose frozen seating is exactly `tables`.
inline TrainedModel make_model(const std::vector<ModalitySpec>& mods,
                               ModelConfig config,
                               const std::vector<ToyTable>& tables,
                               int num_dishes) {
  config = resolve(config, mods);
  CrfState state(make_hyper(config, mods, true));
  int num_rest = 0;
  for (const auto& t : tables) num_rest = std::max(num_rest, t.restaurant + 1);
  std::vector<Restaurant> rest(num_rest);
  for (int r = 0; r < num_rest; ++r) rest[r].object_id = r;
  for (const auto& t : tables) {
    Restaurant& r = rest[t.restaurant];
    const int idx = static_cast<int>(r.tables.size());
    r.tables.push_back({t.dish, 0, 0.0, {}, {}});
    for (const auto& f : t.features) {
      for (int c = 0; c < f[2]; ++c) r.tokens.push_back({f[0], f[1], idx});
    }
  }
  state.load_seating(std::move(rest), num_dishes);
  return TrainedModel(config, mods, std::move(state));
}

inline ObjectRecord make_obs(std::map<std::size_t, Bof> obs, int id = 1000) {
  ObjectRecord o;
  o.object_id = id;
  o.observations = std::move(obs);
  return o;
}

inline double total_variation(const std::vector<double>& p,
                              const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace mhdp::testing
