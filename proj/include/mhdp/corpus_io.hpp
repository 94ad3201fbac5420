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

// Dataset file format.

#pragma once

#include <filesystem>
#include <string>

#include "mhdp/corpus.hpp"
#include "mhdp/json_util.hpp"
#include "mhdp/rng.hpp"

namespace mhdp {

inline Json modality_to_json(const ModalitySpec& s) {
  Json j;
  j["id"] = s.id;
  j["dim"] = s.dimension;
  j["tokens"] = s.token_count;
  j["weight"] = s.weight;
  j["alpha0"] = s.alpha0;
  return j;
}

inline ModalitySpec modality_from_json(const Json& j, const std::string& where) {
  ModalitySpec s;
  s.id = get_field<int>(j, "id", where);
  s.dimension = get_field<int>(j, "dim", where);
  s.token_count = get_field<int>(j, "tokens", where);
  s.weight = j.contains("weight") ? get_field<double>(j, "weight", where) : 1.0;
  s.alpha0 = j.contains("alpha0") ? get_field<double>(j, "alpha0", where) : 0.0;
  return s;
}

inline Json object_to_json(const ObjectRecord& o) {
  Json j;
  j["id"] = o.object_id;
  if (o.truth_label) j["label"] = *o.truth_label;
  Json bof = Json::object();
  for (const auto& [m, counts] : o.observations) {
    bof[std::to_string(m + 1)] = counts;
  }
  j["bof"] = std::move(bof);
  return j;
}

inline ObjectRecord object_from_json(const Json& j, const std::string& where) {
  ObjectRecord o;
  o.object_id = get_field<int>(j, "id", where);
  if (j.contains("label") && !j.at("label").is_null()) {
    o.truth_label = get_field<int>(j, "label", where);
  }
  const Json bof = get_field<Json>(j, "bof", where);
  if (!bof.is_object()) throw ParseError(where + ".bof: expected an object");
  for (const auto& [key, counts] : bof.items()) {
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ParseError(where + ".bof: modality key '" + key +
                       "' is not an integer");
    }
    if (id < 1) {
      throw ParseError(where + ".bof: modality id " + key + " must be >= 1");
    }
    try {
      o.observations[static_cast<std::size_t>(id - 1)] = counts.get<Bof>();
    } catch (const Json::exception& e) {
      throw ParseError(where + ".bof." + key + ": " + e.what());
    }
  }
  return o;
}

inline Json dataset_to_json(const Dataset& d) {
  Json j;
  j["meta"] = Json{{"rng", std::string(Rng::kAlgorithm)}};
  Json mods = Json::array();
  for (const auto& s : d.modalities) mods.push_back(modality_to_json(s));
  j["modalities"] = std::move(mods);
  Json objs = Json::array();
  for (const auto& o : d.objects) objs.push_back(object_to_json(o));
  j["objects"] = std::move(objs);
  return j;
}

inline Dataset dataset_from_json(const Json& j, const std::string& where) {
  Dataset d;
  const Json mods = get_field<Json>(j, "modalities", where);
  if (!mods.is_array()) throw ParseError(where + ".modalities: expected array");
  for (std::size_t i = 0; i < mods.size(); ++i) {
    d.modalities.push_back(modality_from_json(
        mods[i], where + ".modalities[" + std::to_string(i) + "]"));
  }
  const Json objs = get_field<Json>(j, "objects", where);
  if (!objs.is_array()) throw ParseError(where + ".objects: expected array");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    d.objects.push_back(object_from_json(
        objs[i], where + ".objects[" + std::to_string(i) + "]"));
  }
  validate(d);
  return d;
}

inline void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  validate(d);
  write_text_file(path, dump_json(dataset_to_json(d)));
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  const std::string where = path.string();
  return dataset_from_json(parse_json(read_text_file(path), where), where);
}

}  // namespace mhdp
