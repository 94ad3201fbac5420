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

// Experiment report files: detail/summary/stats CSV and a JSON document
// that round-trips the full report.

#pragma once

#include <filesystem>
#include <sstream>
#include <string>

#include "mhdp/error.hpp"
#include "mhdp/eval.hpp"
#include "mhdp/json_util.hpp"

namespace mhdp {

enum class ReportFormat { kCsv, kJson };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  throw ConfigError("unknown report format '" + s + "' (expected csv or json)");
}

inline std::string detail_csv(const ExperimentReport& r) {
  std::ostringstream out;
  out << "object_id,policy,step,kl_to_final,seed\n";
  for (std::size_t p = 0; p < r.policies.size(); ++p) {
    for (const UnitResult& u : r.units) {
      for (int l = 0; l <= r.budget; ++l) {
        out << u.object_id << ',' << r.policies[p] << ',' << l << ','
            << format_double(u.runs[p].kl_to_final[l]) << ',' << u.seed << '\n';
      }
    }
  }
  return out.str();
}

inline std::string summary_csv(const ExperimentReport& r) {
  std::ostringstream out;
  out << "policy,step,mean_kl,sd_kl,count\n";
  for (const SummaryRow& s : r.summary()) {
    out << s.policy << ',' << s.step << ',' << format_double(s.mean_kl) << ','
        << format_double(s.sd_kl) << ',' << s.count << '\n';
  }
  return out.str();
}

inline std::string stats_csv(const ExperimentReport& r) {
  std::ostringstream out;
  out << "policy,mean_evals,sd_evals\n";
  for (const StatsRow& s : r.stats()) {
    out << s.policy << ',' << format_double(s.mean_evals) << ','
        << format_double(s.sd_evals) << '\n';
  }
  return out.str();
}

inline Json report_to_json(const ExperimentReport& r) {
  Json j;
  j["policies"] = r.policies;
  j["budget"] = r.budget;
  Json units = Json::array();
  for (const UnitResult& u : r.units) {
    Json ju;
    ju["object_id"] = u.object_id;
    ju["seed"] = u.seed;
    ju["final_posterior"] = u.final_posterior;
    Json runs = Json::array();
    for (const PolicyRun& run : u.runs) {
      Json order = Json::array();
      for (std::size_t m : run.order) order.push_back(m + 1);
      runs.push_back(Json{{"order", std::move(order)},
                          {"kl_to_final", run.kl_to_final},
                          {"ig_evaluations", run.ig_evaluations},
                          {"re_evaluations", run.re_evaluations}});
    }
    ju["runs"] = std::move(runs);
    units.push_back(std::move(ju));
  }
  j["units"] = std::move(units);
  Json summary = Json::array();
  for (const SummaryRow& s : r.summary()) {
    summary.push_back(Json{{"policy", s.policy},
                           {"step", s.step},
                           {"mean_kl", s.mean_kl},
                           {"sd_kl", s.sd_kl},
                           {"count", s.count}});
  }
  j["summary"] = std::move(summary);
  Json stats = Json::array();
  for (const StatsRow& s : r.stats()) {
    stats.push_back(Json{{"policy", s.policy},
                         {"mean_evals", s.mean_evals},
                         {"sd_evals", s.sd_evals}});
  }
  j["stats"] = std::move(stats);
  return j;
}

inline ExperimentReport report_from_json(const Json& j, const std::string& where) {
  ExperimentReport r;
  r.policies = get_field<std::vector<std::string>>(j, "policies", where);
  r.budget = get_field<int>(j, "budget", where);
  if (r.budget < 0) throw ParseError(where + ": negative budget");
  const Json units = get_field<Json>(j, "units", where);
  if (!units.is_array()) throw ParseError(where + ".units: expected array");
  for (std::size_t i = 0; i < units.size(); ++i) {
    const std::string uw = where + ".units[" + std::to_string(i) + "]";
    UnitResult u;
    u.object_id = get_field<int>(units[i], "object_id", uw);
    u.seed = get_field<std::uint64_t>(units[i], "seed", uw);
    u.final_posterior =
        get_field<std::vector<double>>(units[i], "final_posterior", uw);
    const Json runs = get_field<Json>(units[i], "runs", uw);
    if (!runs.is_array() || runs.size() != r.policies.size()) {
      throw ParseError(uw + ".runs: expected one entry per policy");
    }
    for (std::size_t p = 0; p < runs.size(); ++p) {
      const std::string rw = uw + ".runs[" + std::to_string(p) + "]";
      PolicyRun run;
      for (int m : get_field<std::vector<int>>(runs[p], "order", rw)) {
        if (m < 1) throw ParseError(rw + ".order: modality ids start at 1");
        run.order.push_back(static_cast<std::size_t>(m - 1));
      }
      run.kl_to_final = get_field<std::vector<double>>(runs[p], "kl_to_final", rw);
      if (static_cast<int>(run.kl_to_final.size()) != r.budget + 1) {
        throw ParseError(rw + ".kl_to_final: expected budget + 1 entries");
      }
      run.ig_evaluations = get_field<long>(runs[p], "ig_evaluations", rw);
      run.re_evaluations = get_field<long>(runs[p], "re_evaluations", rw);
      u.runs.push_back(std::move(run));
    }
    r.units.push_back(std::move(u));
  }
  return r;
}

inline ExperimentReport load_report(const std::filesystem::path& path) {
  const std::string where = path.string();
  return report_from_json(parse_json(read_text_file(path), where), where);
}

// csv: detail.csv, summary.csv and stats.csv under dir; json: report.json.
inline void emit_report(const ExperimentReport& r,
                        const std::filesystem::path& dir, ReportFormat format) {
  if (format == ReportFormat::kCsv) {
    write_text_file(dir / "detail.csv", detail_csv(r));
    write_text_file(dir / "summary.csv", summary_csv(r));
    write_text_file(dir / "stats.csv", stats_csv(r));
  } else {
    write_text_file(dir / "report.json", dump_json(report_to_json(r)));
  }
}

}  // namespace mhdp
