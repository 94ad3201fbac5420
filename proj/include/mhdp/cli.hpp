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

// Command-line front end. dispatch() returns the process exit code:
// 0 on success, 1 on a validation or runtime error, 2 on a usage error.

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mhdp/corpus.hpp"
#include "mhdp/corpus_io.hpp"
#include "mhdp/error.hpp"
#include "mhdp/eval.hpp"
#include "mhdp/information_gain.hpp"
#include "mhdp/json_util.hpp"
#include "mhdp/model.hpp"
#include "mhdp/parallel.hpp"
#include "mhdp/planner.hpp"
#include "mhdp/recognition.hpp"
#include "mhdp/report.hpp"

namespace mhdp::cli {

inline constexpr const char* kTool = "mhdp";
inline constexpr const char* kVersion = "1.0.0";

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Metadata block attached to every output. `config` holds every parameter
// that influences the result; output paths, --jobs and --verbose are
// excluded because they do not.
inline Json metadata(const std::string& command, std::uint64_t seed,
                     const Json& config) {
  Json m;
  m["tool"] = kTool;
  m["version"] = kVersion;
  m["command"] = command;
  m["seed"] = seed;
  m["rng"] = std::string(Rng::kAlgorithm);
  m["config"] = config;
  m["config_hash"] = hex64(fnv1a64(config.dump()));
  return m;
}

struct Globals {
  int jobs = default_jobs();
  bool verbose = false;
};

// Modality ids given on the command line are 1-based.
inline std::vector<std::size_t> to_indices(const std::vector<int>& ids) {
  std::vector<std::size_t> out;
  for (int id : ids) {
    if (id < 1) throw ConfigError("modality ids start at 1, got " + std::to_string(id));
    out.push_back(static_cast<std::size_t>(id - 1));
  }
  return out;
}

inline Json ids_json(const std::vector<std::size_t>& idx) {
  Json j = Json::array();
  for (std::size_t m : idx) j.push_back(m + 1);
  return j;
}

inline const ObjectRecord& find_object(const Dataset& d, std::optional<int> id) {
  if (d.objects.empty()) throw ConfigError("object file holds no objects");
  if (!id) return d.objects.front();
  for (const auto& o : d.objects) {
    if (o.object_id == *id) return o;
  }
  throw ConfigError("no object with id " + std::to_string(*id));
}

inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& s) {
  if (s) return *s;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

struct TrainFlags {
  int sweeps = 100;
  double lambda = 1.0;
  double gamma = 1.0;
  std::optional<double> alpha0;
  int recog_sweeps = 50;
  int recog_burnin = 10;
  bool no_new_dishes = false;

  void add(CLI::App* c) {
    c->add_option("--sweeps", sweeps, "training Gibbs sweeps")->capture_default_str();
    c->add_option("--lambda", lambda, "table concentration")->capture_default_str();
    c->add_option("--gamma", gamma, "dish concentration")->capture_default_str();
    c->add_option("--alpha0", alpha0,
                  "emission prior for every modality (default: the dataset's "
                  "generation alpha, else 0.1)");
    c->add_option("--recog-sweeps", recog_sweeps, "recognition sweeps")
        ->capture_default_str();
    c->add_option("--recog-burnin", recog_burnin, "recognition burn-in")
        ->capture_default_str();
    c->add_flag("--no-new-dishes", no_new_dishes,
                "recognition never opens new topics");
  }

  ModelConfig config(std::size_t num_modalities) const {
    ModelConfig c;
    c.lambda = lambda;
    c.gamma = gamma;
    if (alpha0) c.alpha0.assign(num_modalities, *alpha0);
    c.train_sweeps = sweeps;
    c.recog_sweeps = recog_sweeps;
    c.recog_burnin = recog_burnin;
    c.recog_new_dishes = !no_new_dishes;
    return c;
  }
};

struct McFlags {
  int mc = 5000;
  int thin = 1;
  std::optional<int> burnin;

  void add(CLI::App* c, std::optional<int> default_mc) {
    if (default_mc) {
      mc = *default_mc;
      c->add_option("--mc", mc, "Monte Carlo samples per information-gain estimate")
          ->capture_default_str();
    }
    c->add_option("--thin", thin, "chain sweeps between retained samples")
        ->capture_default_str();
    c->add_option("--mc-burnin", burnin, "chain burn-in (default: model's)");
  }

  McOptions options(bool jackknife) const {
    McOptions o;
    o.mc_samples = mc;
    o.thin = thin;
    o.burnin = burnin.value_or(-1);
    o.jackknife = jackknife;
    return o;
  }

  void record(Json& j) const {
    j["mc"] = mc;
    j["thin"] = thin;
    j["mc_burnin"] = burnin ? Json(*burnin) : Json();
  }
};

inline int dispatch(int argc, const char* const* argv, std::ostream& out,
                    std::ostream& err) {
  CLI::App app{"Multimodal HDP categorization and active perception"};
  app.name(kTool);
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "config file of flag values (TOML/INI)");
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);
  Globals g;
  app.add_option("--jobs", g.jobs, "worker threads")->capture_default_str();
  app.add_flag("--verbose,-v", g.verbose, "progress logging to stderr");

  std::function<void()> run;

  // generate ---------------------------------------------------------------
  SyntheticConfig gen;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_out;
  auto* c_gen = app.add_subcommand("generate", "write a synthetic dataset");
  c_gen->add_option("--pure", gen.num_pure)->capture_default_str();
  c_gen->add_option("--mixed", gen.num_mixed)->capture_default_str();
  c_gen->add_option("--per-class", gen.objects_per_class)->capture_default_str();
  c_gen->add_option("--modalities", gen.num_modalities)->capture_default_str();
  c_gen->add_option("--tokens", gen.tokens_per_modality)->capture_default_str();
  c_gen->add_option("--dim", gen.dimension, "features per modality")->capture_default_str();
  c_gen->add_option("--alpha-first", gen.dirichlet_base.first,
                    "generation Dirichlet alpha of modality 1")
      ->capture_default_str();
  c_gen->add_option("--alpha-slope", gen.dirichlet_base.slope,
                    "alpha of modality m > 1 is slope * (m - 1)")
      ->capture_default_str();
  c_gen->add_option("--seed", gen_seed);
  c_gen->add_option("--out", gen_out)->required();
  c_gen->callback([&] {
    run = [&] {
      gen.seed = resolve_seed(gen_seed);
      Json cfg{{"pure", gen.num_pure},
               {"mixed", gen.num_mixed},
               {"per_class", gen.objects_per_class},
               {"modalities", gen.num_modalities},
               {"tokens", gen.tokens_per_modality},
               {"dim", gen.dimension},
               {"alpha_first", gen.dirichlet_base.first},
               {"alpha_slope", gen.dirichlet_base.slope}};
      const Dataset d = generate_synthetic(gen);
      Json j = dataset_to_json(d);
      j["meta"] = metadata("generate", gen.seed, cfg);
      write_text_file(gen_out, dump_json(j));
      if (g.verbose) err << "generate: " << d.objects.size() << " objects\n";
    };
  });

  // train ------------------------------------------------------------------
  std::string tr_data, tr_out;
  std::optional<std::uint64_t> tr_seed;
  TrainFlags tf;
  auto* c_tr = app.add_subcommand("train", "fit the model to a dataset");
  c_tr->add_option("--data", tr_data)->required();
  c_tr->add_option("--seed", tr_seed);
  c_tr->add_option("--out", tr_out)->required();
  tf.add(c_tr);
  c_tr->callback([&] {
    run = [&] {
      const std::uint64_t seed = resolve_seed(tr_seed);
      const Dataset d = load_dataset(tr_data);
      const ModelConfig mc = tf.config(d.modalities.size());
      const auto t0 = std::chrono::steady_clock::now();
      const TrainedModel model = train(d, mc, seed, [&](const TrainProgress& p) {
        if (g.verbose && (p.sweep % 10 == 0 || p.sweep == mc.train_sweeps)) {
          err << "train: sweep " << p.sweep << " log-lik "
              << format_double(p.log_likelihood) << " topics " << p.num_topics
              << "\n";
        }
      });
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      Json cfg = config_to_json(model.config());
      cfg["data"] = tr_data;
      cfg["data_hash"] = hex64(fnv1a64(read_text_file(tr_data)));
      Json j = model_to_json(model);
      j["meta"] = metadata("train", seed, cfg);
      j["meta"]["format"] = "mhdp-model";
      write_text_file(tr_out, dump_json(j));
      err << "train: " << model.num_topics() << " topics in "
          << format_double(dt.count()) << " s\n";
    };
  });

  // recognize --------------------------------------------------------------
  std::string rc_model, rc_object, rc_out;
  std::optional<int> rc_id;
  std::vector<int> rc_mods;
  std::optional<std::uint64_t> rc_seed;
  auto* c_rc = app.add_subcommand("recognize", "category posterior of one object");
  c_rc->add_option("--model", rc_model)->required();
  c_rc->add_option("--object", rc_object, "dataset file holding the object")->required();
  c_rc->add_option("--id", rc_id, "object id (default: first object)");
  c_rc->add_option("--modalities", rc_mods, "observed modality ids (default: all stored)")
      ->delimiter(',');
  c_rc->add_option("--seed", rc_seed);
  c_rc->add_option("--out", rc_out, "output file (default: stdout)");
  c_rc->callback([&] {
    run = [&] {
      const std::uint64_t seed = resolve_seed(rc_seed);
      const TrainedModel model = load_model(rc_model);
      const Dataset d = load_dataset(rc_object);
      const ObjectRecord& o = find_object(d, rc_id);
      std::vector<std::size_t> mods =
          rc_mods.empty() ? observed_modalities(o) : to_indices(rc_mods);
      std::sort(mods.begin(), mods.end());
      const ObjectRecord obs = restrict_to(o, mods);
      const RecognitionState st = recognize(model, obs, seed);
      Json cfg{{"model", rc_model},
               {"object", rc_object},
               {"id", o.object_id},
               {"modalities", ids_json(mods)}};
      Json j;
      j["meta"] = metadata("recognize", seed, cfg);
      j["object_id"] = o.object_id;
      j["observed"] = ids_json(st.observed_set);
      j["category_posterior"] = st.category_posterior;
      j["argmax"] = index_of_max(st.category_posterior);
      j["latent_samples"] = st.latent_samples.size();
      if (rc_out.empty()) {
        out << dump_json(j);
      } else {
        write_text_file(rc_out, dump_json(j));
      }
    };
  });

  // plan -------------------------------------------------------------------
  std::string pl_model, pl_object, pl_out, pl_policy = "greedy";
  std::optional<int> pl_id;
  std::vector<int> pl_observed{1};
  int pl_budget = 5;
  double pl_slack = 0.0;
  McFlags pl_mc;
  std::optional<std::uint64_t> pl_seed;
  auto* c_pl = app.add_subcommand("plan", "select actions for one object");
  c_pl->add_option("--model", pl_model)->required();
  c_pl->add_option("--object", pl_object, "dataset file holding the object")->required();
  c_pl->add_option("--id", pl_id, "object id (default: first object)");
  c_pl->add_option("--observed", pl_observed, "initially observed modality ids")
      ->delimiter(',')
      ->capture_default_str();
  c_pl->add_option("--budget", pl_budget)->capture_default_str();
  c_pl->add_option("--policy", pl_policy)
      ->check(CLI::IsMember({"greedy", "lazy", "random"}))
      ->capture_default_str();
  c_pl->add_option("--slack", pl_slack, "lazy acceptance slack")->capture_default_str();
  pl_mc.add(c_pl, 5000);
  c_pl->add_option("--seed", pl_seed);
  c_pl->add_option("--out", pl_out, "output file (default: stdout)");
  c_pl->callback([&] {
    run = [&] {
      const std::uint64_t seed = resolve_seed(pl_seed);
      const TrainedModel model = load_model(pl_model);
      const Dataset d = load_dataset(pl_object);
      const ObjectRecord& o = find_object(d, pl_id);
      const std::vector<std::size_t> init = to_indices(pl_observed);
      const McOptions mo = pl_mc.options(true);
      PlanResult pr;
      if (pl_policy == "greedy") {
        pr = greedy_select(model, o, init, pl_budget, mo, seed);
      } else if (pl_policy == "lazy") {
        pr = lazy_greedy_select(model, o, init, pl_budget, mo, seed, pl_slack);
      } else {
        pr = random_select(model, init, pl_budget, seed);
      }
      Json cfg{{"model", pl_model},    {"object", pl_object},
               {"id", o.object_id},    {"observed", ids_json(init)},
               {"budget", pl_budget},  {"policy", pl_policy},
               {"slack", pl_slack}};
      pl_mc.record(cfg);
      Json steps = Json::array();
      for (const PlanStep& s : pr.plan.steps) {
        Json js{{"modality", s.modality + 1}};
        if (s.ig) {
          js["ig"] = s.ig->value;
          js["std_error"] = s.ig->std_error;
          js["mc_samples"] = s.ig->mc_samples;
        }
        steps.push_back(std::move(js));
      }
      Json j;
      j["meta"] = metadata("plan", seed, cfg);
      j["object_id"] = o.object_id;
      j["policy"] = pl_policy;
      j["initial_observed"] = ids_json(pr.plan.initial_observed);
      j["budget"] = pr.plan.budget;
      j["steps"] = std::move(steps);
      j["stats"] = Json{{"ig_evaluations", pr.stats.ig_evaluations},
                        {"re_evaluations", pr.stats.re_evaluations}};
      err << "plan: " << pr.stats.ig_evaluations << " evaluations in "
          << format_double(pr.stats.wall_time.count()) << " s\n";
      if (pl_out.empty()) {
        out << dump_json(j);
      } else {
        write_text_file(pl_out, dump_json(j));
      }
    };
  });

  // experiment -------------------------------------------------------------
  std::string ex_data, ex_model, ex_out;
  std::vector<std::string> ex_policies{"greedy", "lazy", "random"};
  std::vector<int> ex_observed{1};
  int ex_budget = 19;
  int ex_seeds = 5;
  double ex_slack = 0.0;
  bool ex_jackknife = false;
  McFlags ex_mc;
  std::optional<std::uint64_t> ex_seed;
  auto* c_ex = app.add_subcommand("experiment", "KL-decay experiment over a dataset");
  c_ex->add_option("--data", ex_data)->required();
  c_ex->add_option("--model", ex_model)->required();
  c_ex->add_option("--policies", ex_policies)->delimiter(',')->capture_default_str();
  c_ex->add_option("--observed", ex_observed, "initially observed modality ids")
      ->delimiter(',')
      ->capture_default_str();
  c_ex->add_option("--budget", ex_budget)->capture_default_str();
  c_ex->add_option("--seeds", ex_seeds, "experiment replicates")->capture_default_str();
  c_ex->add_option("--slack", ex_slack, "lazy acceptance slack")->capture_default_str();
  c_ex->add_flag("--jackknife", ex_jackknife, "also compute jackknife errors");
  ex_mc.add(c_ex, 5000);
  c_ex->add_option("--seed", ex_seed);
  c_ex->add_option("--out", ex_out, "output directory")->required();
  c_ex->callback([&] {
    run = [&] {
      const std::uint64_t seed = resolve_seed(ex_seed);
      const Dataset d = load_dataset(ex_data);
      const TrainedModel model = load_model(ex_model);
      ExperimentConfig ec;
      ec.policies = ex_policies;
      ec.budget = ex_budget;
      ec.initial_observed = to_indices(ex_observed);
      ec.mc = ex_mc.options(ex_jackknife);
      ec.num_seeds = ex_seeds;
      ec.seed = seed;
      ec.lazy_slack = ex_slack;
      ec.jobs = g.jobs;
      if (g.verbose) {
        ec.progress = [&err](std::size_t done, std::size_t total) {
          static std::mutex mu;
          std::lock_guard<std::mutex> lock(mu);
          err << "experiment: " << done << "/" << total << "\n";
        };
      }
      const auto t0 = std::chrono::steady_clock::now();
      const ExperimentReport rep = run_experiment(d, model, ec);
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      Json ids = Json::array();
      for (const auto& p : ex_policies) ids.push_back(p);
      Json cfg{{"data", ex_data},
               {"model", ex_model},
               {"policies", ids},
               {"observed", ids_json(ec.initial_observed)},
               {"budget", ex_budget},
               {"seeds", ex_seeds},
               {"slack", ex_slack},
               {"jackknife", ex_jackknife}};
      ex_mc.record(cfg);
      const Json meta = metadata("experiment", seed, cfg);
      const std::filesystem::path dir(ex_out);
      emit_report(rep, dir, ReportFormat::kCsv);
      Json j = report_to_json(rep);
      j["meta"] = meta;
      write_text_file(dir / "report.json", dump_json(j));
      write_text_file(dir / "meta.json", dump_json(meta));
      err << "experiment: " << rep.units.size() << " runs in "
          << format_double(dt.count()) << " s\n";
    };
  });

  // sweep ------------------------------------------------------------------
  std::string sw_model, sw_data, sw_out;
  int sw_object = 0;
  int sw_modality = 2;
  std::vector<int> sw_counts{250, 500, 1000, 2000, 4000};
  std::vector<int> sw_observed{1};
  int sw_reps = 100;
  bool sw_jackknife = false;
  McFlags sw_mc;
  std::optional<std::uint64_t> sw_seed;
  auto* c_sw = app.add_subcommand("sweep", "spread of the IG estimate versus samples");
  c_sw->add_option("--model", sw_model)->required();
  c_sw->add_option("--data", sw_data, "dataset holding the object")->required();
  c_sw->add_option("--object", sw_object, "object id")->capture_default_str();
  c_sw->add_option("--modality", sw_modality, "candidate modality id")->capture_default_str();
  c_sw->add_option("--observed", sw_observed, "observed modality ids")
      ->delimiter(',')
      ->capture_default_str();
  c_sw->add_option("--counts", sw_counts)->delimiter(',')->capture_default_str();
  c_sw->add_option("--reps", sw_reps)->capture_default_str();
  c_sw->add_flag("--jackknife", sw_jackknife, "also compute jackknife errors");
  sw_mc.add(c_sw, std::nullopt);
  c_sw->add_option("--seed", sw_seed);
  c_sw->add_option("--out", sw_out, "output CSV")->required();
  c_sw->callback([&] {
    run = [&] {
      const std::uint64_t seed = resolve_seed(sw_seed);
      const TrainedModel model = load_model(sw_model);
      const Dataset d = load_dataset(sw_data);
      const ObjectRecord& o = find_object(d, sw_object);
      const std::vector<std::size_t> init = to_indices(sw_observed);
      const std::size_t m = to_indices({sw_modality})[0];
      const std::vector<SweepRow> rows =
          ig_variance_sweep(model, restrict_to(o, init), m, sw_counts, sw_reps,
                            seed, sw_mc.options(sw_jackknife), g.jobs);
      std::ostringstream csv;
      csv << "mc_samples,replicates,mean,sd,se_mean,mean_jackknife\n";
      for (const SweepRow& r : rows) {
        csv << r.mc_samples << ',' << r.replicates << ',' << format_double(r.mean)
            << ',' << format_double(r.sd) << ',' << format_double(r.se_mean) << ','
            << format_double(r.mean_jackknife) << '\n';
      }
      Json counts = sw_counts;
      Json cfg{{"model", sw_model},   {"data", sw_data},
               {"object", sw_object}, {"modality", sw_modality},
               {"observed", ids_json(init)}, {"counts", counts},
               {"reps", sw_reps},     {"jackknife", sw_jackknife},
               {"thin", sw_mc.thin},
               {"mc_burnin", sw_mc.burnin ? Json(*sw_mc.burnin) : Json()}};
      write_text_file(sw_out, csv.str());
      write_text_file(sw_out + ".meta.json",
                      dump_json(metadata("sweep", seed, cfg)));
    };
  });

  // report -----------------------------------------------------------------
  std::string rp_in, rp_out, rp_format = "csv";
  auto* c_rp = app.add_subcommand("report", "re-emit a saved experiment report");
  c_rp->add_option("--in", rp_in, "report.json")->required();
  c_rp->add_option("--format", rp_format)
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  c_rp->add_option("--out", rp_out, "output directory")->required();
  c_rp->callback([&] {
    run = [&] {
      const Json j = parse_json(read_text_file(rp_in), rp_in);
      const ExperimentReport rep = report_from_json(j, rp_in);
      const std::filesystem::path dir(rp_out);
      if (parse_report_format(rp_format) == ReportFormat::kCsv) {
        emit_report(rep, dir, ReportFormat::kCsv);
      } else {
        Json o = report_to_json(rep);
        if (j.contains("meta")) o["meta"] = j["meta"];
        write_text_file(dir / "report.json", dump_json(o));
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  try {
    if (g.jobs < 1) throw ConfigError("--jobs must be >= 1");
    if (run) run();
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int dispatch(int argc, const char* const* argv) {
  return dispatch(argc, argv, std::cout, std::cerr);
}

inline int dispatch(const std::vector<std::string>& args, std::ostream& out,
                    std::ostream& err) {
  std::vector<const char*> argv{kTool};
  for (const auto& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mhdp::cli
