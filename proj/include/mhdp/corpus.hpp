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

// Multimodal bag-of-features data model and the synthetic generator.
//
// Modalities are addressed by their 0-based position in
// Dataset::modalities. The serialized `id` of a modality is position + 1.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhdp/error.hpp"
#include "mhdp/rng.hpp"

namespace mhdp {

struct ModalitySpec {
  int id = 1;                // 1-based, equals position + 1
  int dimension = 1;         // vocabulary size d^m
  int token_count = 0;       // tokens per object N^m
  double weight = 1.0;       // w^m
  double alpha0 = 0.0;       // generation Dirichlet alpha; 0 when unknown

  friend bool operator==(const ModalitySpec&, const ModalitySpec&) = default;
};

// Feature histogram of one modality.
using Bof = std::vector<int>;

inline long bof_total(const Bof& b) {
  long n = 0;
  for (int c : b) n += c;
  return n;
}

struct ObjectRecord {
  int object_id = 0;
  std::map<std::size_t, Bof> observations;  // modality index -> histogram
  std::optional<int> truth_label;

  friend bool operator==(const ObjectRecord&, const ObjectRecord&) = default;
};

struct Dataset {
  std::vector<ModalitySpec> modalities;
  std::vector<ObjectRecord> objects;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Throws DimensionError / ConfigError on the first violated invariant.
inline void validate(const Dataset& d) {
  for (std::size_t m = 0; m < d.modalities.size(); ++m) {
    const ModalitySpec& s = d.modalities[m];
    if (s.id != static_cast<int>(m) + 1) {
      throw ConfigError("modality at position " + std::to_string(m) +
                        " has id " + std::to_string(s.id) + ", expected " +
                        std::to_string(m + 1));
    }
    if (s.dimension < 1) {
      throw ConfigError("modality " + std::to_string(s.id) +
                        ": dimension must be >= 1");
    }
    if (s.token_count < 0) {
      throw ConfigError("modality " + std::to_string(s.id) +
                        ": token_count must be >= 0");
    }
    if (!(s.weight >= 0.0)) {
      throw ConfigError("modality " + std::to_string(s.id) +
                        ": weight must be >= 0");
    }
  }
  for (const ObjectRecord& o : d.objects) {
    for (const auto& [m, bof] : o.observations) {
      if (m >= d.modalities.size()) {
        throw ConfigError("object " + std::to_string(o.object_id) +
                          " references undeclared modality " +
                          std::to_string(m + 1));
      }
      if (static_cast<int>(bof.size()) != d.modalities[m].dimension) {
        throw DimensionError(
            "object " + std::to_string(o.object_id) + " modality " +
            std::to_string(m + 1) + ": histogram length " +
            std::to_string(bof.size()) + " != dimension " +
            std::to_string(d.modalities[m].dimension));
      }
      for (int c : bof) {
        if (c < 0) {
          throw DimensionError("object " + std::to_string(o.object_id) +
                               ": negative count");
        }
      }
    }
  }
}

// Alpha of the symmetric generation Dirichlet for modality index m:
// `first` for m == 0, `slope * m` otherwise.
struct DirichletSchedule {
  double first = 10.0;
  double slope = 0.4;

  double alpha(std::size_t m) const {
    return m == 0 ? first : slope * static_cast<double>(m);
  }
};

struct SyntheticConfig {
  int num_pure = 14;
  int num_mixed = 7;
  int objects_per_class = 3;
  int num_modalities = 20;
  int dimension = 10;
  DirichletSchedule dirichlet_base;
  int tokens_per_modality = 20;
  std::uint64_t seed = 0;
};

inline void validate(const SyntheticConfig& c) {
  if (c.num_pure < 1 || c.objects_per_class < 1 || c.num_modalities < 1 ||
      c.dimension < 1 || c.tokens_per_modality < 1) {
    throw ConfigError("synthetic config: all counts must be >= 1");
  }
  if (c.num_mixed < 0 || 2 * c.num_mixed > c.num_pure) {
    throw ConfigError("synthetic config: num_mixed must be in [0, num_pure/2]");
  }
  for (int m = 0; m < c.num_modalities; ++m) {
    if (!(c.dirichlet_base.alpha(m) > 0.0)) {
      throw ConfigError("synthetic config: Dirichlet alpha for modality " +
                        std::to_string(m + 1) + " must be > 0");
    }
  }
}

// Element-wise mean of two probability vectors.
inline std::vector<double> mix_parameters(std::span<const double> a,
                                          std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("mix_parameters: length " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = 0.5 * (a[i] + b[i]);
  return out;
}

inline Bof draw_bof(std::span<const double> probs, int count, Rng& rng) {
  Bof b(probs.size(), 0);
  for (int n = 0; n < count; ++n) ++b[rng.categorical(probs)];
  return b;
}

// target_count i.i.d. draws from the normalized histogram.
inline Bof resample_bof(std::span<const double> histogram, int target_count,
                        std::uint64_t seed) {
  double total = 0.0;
  for (double h : histogram) {
    if (!(h >= 0.0)) throw DimensionError("resample_bof: negative entry");
    total += h;
  }
  if (!(total > 0.0)) {
    throw DimensionError("resample_bof: histogram has no positive entry");
  }
  if (target_count < 0) throw ConfigError("resample_bof: target_count < 0");
  Rng rng(seed);
  return draw_bof(histogram, target_count, rng);
}

// Emission parameters of every generating class, [class][modality][feature].
// Pure classes come first; mixed class i averages pure classes 2i and 2i+1.
inline std::vector<std::vector<std::vector<double>>> synthetic_class_parameters(
    const SyntheticConfig& c) {
  validate(c);
  std::vector<std::vector<std::vector<double>>> theta(c.num_pure +
                                                      c.num_mixed);
  for (int k = 0; k < c.num_pure; ++k) {
    theta[k].resize(c.num_modalities);
    for (int m = 0; m < c.num_modalities; ++m) {
      Rng rng(derive_seed(c.seed, {0x636c6173ULL, std::uint64_t(k),
                                   std::uint64_t(m)}));
      theta[k][m] = rng.dirichlet(c.dirichlet_base.alpha(m), c.dimension);
    }
  }
  for (int i = 0; i < c.num_mixed; ++i) {
    auto& mixed = theta[c.num_pure + i];
    mixed.resize(c.num_modalities);
    for (int m = 0; m < c.num_modalities; ++m) {
      mixed[m] = mix_parameters(theta[2 * i][m], theta[2 * i + 1][m]);
    }
  }
  return theta;
}

inline Dataset generate_synthetic(const SyntheticConfig& c) {
  const auto theta = synthetic_class_parameters(c);
  Dataset d;
  for (int m = 0; m < c.num_modalities; ++m) {
    d.modalities.push_back({m + 1, c.dimension, c.tokens_per_modality, 1.0,
                            c.dirichlet_base.alpha(m)});
  }
  int next_id = 0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    for (int r = 0; r < c.objects_per_class; ++r) {
      ObjectRecord o;
      o.object_id = next_id++;
      o.truth_label = static_cast<int>(k);
      Rng rng(derive_seed(c.seed, {0x6f626aULL, std::uint64_t(o.object_id)}));
      for (int m = 0; m < c.num_modalities; ++m) {
        o.observations[m] = draw_bof(theta[k][m], c.tokens_per_modality, rng);
      }
      d.objects.push_back(std::move(o));
    }
  }
  return d;
}

// Copy of `o` restricted to the given modalities.
inline ObjectRecord restrict_to(const ObjectRecord& o,
                                std::span<const std::size_t> modalities) {
  ObjectRecord r;
  r.object_id = o.object_id;
  r.truth_label = o.truth_label;
  for (std::size_t m : modalities) {
    auto it = o.observations.find(m);
    if (it == o.observations.end()) {
      throw ContractError("object " + std::to_string(o.object_id) +
                          " has no observation for modality " +
                          std::to_string(m + 1));
    }
    r.observations.insert(*it);
  }
  return r;
}

}  // namespace mhdp
