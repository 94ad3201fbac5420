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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mhdp/eval.hpp"
#include "mhdp/report.hpp"

namespace mhdp {
namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "mhdp_eval_test" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

TEST(KlDivergence, Examples) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  EXPECT_EQ(kl_divergence(p, p), 0.0);
  const std::vector<double> a{1, 0}, b{0.5, 0.5}, c{0, 1};
  EXPECT_NEAR(kl_divergence(a, b), std::log(2.0), 1e-8);
  // Smoothing: (1, 0) becomes (1 - e', e') with e' = eps / (1 + 2 eps).
  const double e = kKlEpsilon / (1 + 2 * kKlEpsilon);
  const double want = (1 - 2 * e) * std::log((1 - e) / e);
  EXPECT_NEAR(kl_divergence(a, c), want, 1e-12 * want);
  EXPECT_TRUE(std::isfinite(kl_divergence(a, c)));
}

TEST(KlDivergence, ValidatesInputs) {
  const std::vector<double> a{1, 0}, b{0.2, 0.3, 0.5}, c{0.7, 0.7};
  EXPECT_THROW(kl_divergence(a, b), DimensionError);
  EXPECT_THROW(kl_divergence(a, c), ContractError);
}

TEST(KlDivergence, NonNegativeAndZeroOnlyOnEqualInputs) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto p = rng.dirichlet(0.5, 5);
    const auto q = rng.dirichlet(0.5, 5);
    EXPECT_GT(kl_divergence(p, q), 0.0);
    EXPECT_EQ(kl_divergence(p, p), 0.0);
  }
}

TEST(ParsePolicy, KnownAndUnknown) {
  EXPECT_EQ(parse_policy("lazy"), Policy::kLazy);
  EXPECT_THROW(parse_policy("optimal"), ConfigError);
}

class SmallExperiment : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SyntheticConfig c;
    c.num_pure = 4;
    c.num_mixed = 2;
    c.objects_per_class = 1;
    c.num_modalities = 5;
    c.dimension = 6;
    c.tokens_per_modality = 10;
    c.seed = 8;
    data_ = new Dataset(generate_synthetic(c));
    ModelConfig mc;
    mc.train_sweeps = 20;
    mc.recog_sweeps = 20;
    mc.recog_burnin = 5;
    model_ = new TrainedModel(train(*data_, mc, 8));
    cfg_ = new ExperimentConfig;
    cfg_->budget = 4;
    cfg_->mc.mc_samples = 60;
    cfg_->mc.jackknife = false;
    cfg_->num_seeds = 2;
    cfg_->seed = 11;
    report_ = new ExperimentReport(run_experiment(*data_, *model_, *cfg_));
  }
  static void TearDownTestSuite() {
    delete report_;
    delete cfg_;
    delete model_;
    delete data_;
  }
  static Dataset* data_;
  static TrainedModel* model_;
  static ExperimentConfig* cfg_;
  static ExperimentReport* report_;
};
Dataset* SmallExperiment::data_ = nullptr;
TrainedModel* SmallExperiment::model_ = nullptr;
ExperimentConfig* SmallExperiment::cfg_ = nullptr;
ExperimentReport* SmallExperiment::report_ = nullptr;

TEST_F(SmallExperiment, CurvesStartTogetherAndEndAtZero) {
  const ExperimentReport& r = *report_;
  ASSERT_EQ(r.units.size(), data_->objects.size() * 2);
  for (const UnitResult& u : r.units) {
    ASSERT_EQ(u.runs.size(), 3u);
    for (const PolicyRun& run : u.runs) {
      ASSERT_EQ(run.kl_to_final.size(), 5u);
      EXPECT_EQ(run.kl_to_final[0], u.runs[0].kl_to_final[0]);
      EXPECT_LE(run.kl_to_final[4], 1e-6);
      for (double v : run.kl_to_final) EXPECT_GE(v, 0.0);
      EXPECT_EQ(run.order.size(), 4u);
    }
    EXPECT_NEAR(std::accumulate(u.final_posterior.begin(), u.final_posterior.end(), 0.0),
                1.0, 1e-9);
  }
}

TEST_F(SmallExperiment, EvaluationCountsAreBookedPerPolicy) {
  for (const UnitResult& u : report_->units) {
    EXPECT_EQ(u.runs[0].ig_evaluations, 4 + 3 + 2 + 1);
    EXPECT_EQ(u.runs[0].re_evaluations, 0);
    EXPECT_GE(u.runs[1].ig_evaluations, 4 + 3);
    EXPECT_LE(u.runs[1].re_evaluations, u.runs[1].ig_evaluations);
    EXPECT_EQ(u.runs[2].ig_evaluations, 0);
  }
  const auto stats = report_->stats();
  ASSERT_EQ(stats.size(), 3u);
  EXPECT_EQ(stats[0].mean_evals, 10.0);
  EXPECT_EQ(stats[0].sd_evals, 0.0);
}

TEST_F(SmallExperiment, GreedyAndLazyShareTheFirstPick) {
  for (const UnitResult& u : report_->units) {
    EXPECT_EQ(u.runs[0].order[0], u.runs[1].order[0]);
  }
}

TEST_F(SmallExperiment, ParallelRunIsIdentical) {
  ExperimentConfig c = *cfg_;
  c.jobs = 2;
  const ExperimentReport r = run_experiment(*data_, *model_, c);
  EXPECT_EQ(dump_json(report_to_json(r)), dump_json(report_to_json(*report_)));
}

TEST_F(SmallExperiment, MeanCurveIsTheArithmeticMean) {
  const auto curve = report_->mean_curve("random");
  for (int l = 0; l <= 4; ++l) {
    double s = 0.0;
    for (const UnitResult& u : report_->units) s += u.runs[2].kl_to_final[l];
    EXPECT_DOUBLE_EQ(curve[l], s / report_->units.size());
  }
  EXPECT_THROW(report_->mean_curve("brute"), ConfigError);
}

TEST_F(SmallExperiment, SummaryCsvMatchesIndependentAggregation) {
  const auto dir = temp_dir("agg");
  emit_report(*report_, dir, ReportFormat::kCsv);
  const auto detail = read_csv(read_text_file(dir / "detail.csv"));
  const auto summary = read_csv(read_text_file(dir / "summary.csv"));
  ASSERT_EQ(detail[0], (std::vector<std::string>{"object_id", "policy", "step",
                                                 "kl_to_final", "seed"}));
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (std::size_t i = 1; i < detail.size(); ++i) {
    groups[{detail[i][1], detail[i][2]}].push_back(std::stod(detail[i][3]));
  }
  ASSERT_EQ(summary.size(), groups.size() + 1);
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& xs = groups.at({summary[i][0], summary[i][1]});
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    EXPECT_NEAR(std::stod(summary[i][2]), mean, 1e-12 * (1 + mean));
    EXPECT_NEAR(std::stod(summary[i][3]), std::sqrt(ss / (xs.size() - 1)),
                1e-12 * (1 + mean));
    EXPECT_EQ(std::stoul(summary[i][4]), xs.size());
  }
  const auto stats = read_csv(read_text_file(dir / "stats.csv"));
  EXPECT_EQ(stats[0], (std::vector<std::string>{"policy", "mean_evals", "sd_evals"}));
  EXPECT_EQ(stats.size(), 4u);
}

TEST_F(SmallExperiment, ReEmissionAndJsonRoundTripAreByteIdentical) {
  const auto a = temp_dir("a"), b = temp_dir("b");
  emit_report(*report_, a, ReportFormat::kCsv);
  emit_report(*report_, b, ReportFormat::kCsv);
  for (const char* f : {"detail.csv", "summary.csv", "stats.csv"}) {
    EXPECT_EQ(read_text_file(a / f), read_text_file(b / f)) << f;
  }
  emit_report(*report_, a, ReportFormat::kJson);
  const ExperimentReport back = load_report(a / "report.json");
  emit_report(back, b, ReportFormat::kJson);
  EXPECT_EQ(read_text_file(a / "report.json"), read_text_file(b / "report.json"));
  EXPECT_EQ(detail_csv(back), detail_csv(*report_));
  EXPECT_EQ(summary_csv(back), summary_csv(*report_));
}

TEST_F(SmallExperiment, RejectsMismatchedConfigurations) {
  ExperimentConfig c = *cfg_;
  c.budget = 5;
  EXPECT_THROW(run_experiment(*data_, *model_, c), BudgetError);
  c = *cfg_;
  c.policies = {"greedy", "oracle"};
  EXPECT_THROW(run_experiment(*data_, *model_, c), ConfigError);
  c = *cfg_;
  c.num_seeds = 0;
  EXPECT_THROW(run_experiment(*data_, *model_, c), ConfigError);
  Dataset other = *data_;
  other.modalities[0].dimension = 7;
  EXPECT_THROW(run_experiment(other, *model_, *cfg_), ConfigError);
}

TEST_F(SmallExperiment, VarianceSweepShrinksAndIsDeterministic) {
  const std::size_t first[1] = {0};
  const ObjectRecord obs = restrict_to(data_->objects[1], first);
  const std::vector<int> counts{20, 320};
  McOptions o;
  o.jackknife = false;
  const auto rows = ig_variance_sweep(*model_, obs, 2, counts, 30, 4, o);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GT(rows[0].sd, 0.0);
  EXPECT_GT(rows[1].sd, 0.0);
  EXPECT_LT(rows[1].sd, rows[0].sd);
  EXPECT_EQ(rows[0].mean_jackknife, 0.0);
  EXPECT_NEAR(rows[1].se_mean, rows[1].sd / std::sqrt(30.0), 1e-15);
  const auto again = ig_variance_sweep(*model_, obs, 2, counts, 30, 4, o, 2);
  EXPECT_EQ(again[1].mean, rows[1].mean);
  EXPECT_EQ(again[1].sd, rows[1].sd);
  EXPECT_THROW(ig_variance_sweep(*model_, obs, 0, counts, 3, 4, o), ContractError);
}

TEST(EmitReport, EmptyReportIsHeaderOnly) {
  ExperimentReport r;
  r.policies = {"greedy"};
  r.budget = 3;
  const auto dir = temp_dir("empty");
  emit_report(r, dir, ReportFormat::kCsv);
  EXPECT_EQ(read_text_file(dir / "detail.csv"), "object_id,policy,step,kl_to_final,seed\n");
  EXPECT_EQ(read_text_file(dir / "summary.csv"), "policy,step,mean_kl,sd_kl,count\n");
  EXPECT_EQ(read_text_file(dir / "stats.csv"), "policy,mean_evals,sd_evals\n");
}

TEST(EmitReport, UnwritablePathIsIoError) {
  const auto dir = temp_dir("blocked");
  std::ofstream(dir / "file") << "x";
  ExperimentReport r;
  EXPECT_THROW(emit_report(r, dir / "file" / "sub", ReportFormat::kCsv), IoError);
}

}  // namespace
}  // namespace mhdp
