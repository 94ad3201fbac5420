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

#include <filesystem>
#include <sstream>

#include "mhdp/cli.hpp"

namespace mhdp {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "mhdp_cli_test" /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void small_pipeline_inputs() {
    ASSERT_EQ(run({"generate", "--pure", "4", "--mixed", "2", "--per-class", "1",
                   "--modalities", "4", "--tokens", "8", "--dim", "5", "--seed", "7",
                   "--out", path("data.json")})
                  .code,
              0);
    const CliRun t = run({"train", "--data", path("data.json"), "--sweeps", "10",
                       "--recog-sweeps", "12", "--recog-burnin", "2", "--seed", "3",
                       "--out", path("model.json")});
    ASSERT_EQ(t.code, 0) << t.err;
  }

  fs::path dir_;
};

TEST_F(CliTest, GenerateIsDeterministicAndRecordsMetadata) {
  const std::vector<std::string> base{"generate", "--pure", "2", "--mixed", "1",
                                      "--per-class", "2", "--modalities", "3",
                                      "--seed", "7", "--out"};
  auto a = base, b = base;
  a.push_back(path("a.json"));
  b.push_back(path("b.json"));
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  const Json j = parse_json(slurp(path("a.json")), "a");
  EXPECT_EQ(j["meta"]["tool"], "mhdp");
  EXPECT_EQ(j["meta"]["seed"], 7);
  EXPECT_EQ(j["meta"]["command"], "generate");
  EXPECT_TRUE(j["meta"].contains("config_hash"));
  EXPECT_TRUE(j["meta"].contains("version"));
  EXPECT_EQ(load_dataset(path("a.json")).objects.size(), 6u);
}

TEST_F(CliTest, MissingSeedIsGeneratedAndRecorded) {
  ASSERT_EQ(run({"generate", "--pure", "2", "--mixed", "0", "--per-class", "1",
                 "--modalities", "2", "--out", path("a.json")})
                .code,
            0);
  const Json j = parse_json(slurp(path("a.json")), "a");
  const std::uint64_t seed = j["meta"]["seed"].get<std::uint64_t>();
  ASSERT_EQ(run({"generate", "--pure", "2", "--mixed", "0", "--per-class", "1",
                 "--modalities", "2", "--seed", std::to_string(seed), "--out",
                 path("b.json")})
                .code,
            0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST_F(CliTest, UsageErrorsExitTwoWithUsage) {
  const CliRun a = run({"generate", "--bogus", "1", "--out", path("x.json")});
  EXPECT_EQ(a.code, 2);
  EXPECT_NE((a.out + a.err).find("Usage"), std::string::npos);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"train", "--data", path("d.json")}).code, 2);  // --out missing
  EXPECT_EQ(run({"plan", "--model", "m", "--object", "o", "--policy", "best"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, ValidationErrorsExitOne) {
  const CliRun a = run({"generate", "--pure", "3", "--mixed", "2", "--out", path("x.json")});
  EXPECT_EQ(a.code, 1);
  EXPECT_NE(a.err.find("error:"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("x.json")));
  EXPECT_EQ(run({"train", "--data", path("missing.json"), "--out", path("m.json")}).code, 1);
  EXPECT_EQ(run({"--jobs", "0", "generate", "--out", path("y.json")}).code, 1);
}

TEST_F(CliTest, ConfigFileSuppliesFlags) {
  fs::create_directories(dir_);
  write_text_file(path("gen.ini"),
                  "[generate]\npure=2\nmixed=1\nper-class=1\nmodalities=2\nseed=5\n");
  ASSERT_EQ(run({"--config", path("gen.ini"), "generate", "--out", path("a.json")}).code, 0);
  ASSERT_EQ(run({"generate", "--pure", "2", "--mixed", "1", "--per-class", "1",
                 "--modalities", "2", "--seed", "5", "--out", path("b.json")})
                .code,
            0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST_F(CliTest, PipelineIsReproducibleAcrossJobCounts) {
  small_pipeline_inputs();
  // Training again with the same seed reproduces the model file.
  ASSERT_EQ(run({"train", "--data", path("data.json"), "--sweeps", "10",
                 "--recog-sweeps", "12", "--recog-burnin", "2", "--seed", "3",
                 "--out", path("model2.json")})
                .code,
            0);
  EXPECT_EQ(slurp(path("model.json")), slurp(path("model2.json")));

  const CliRun r1 = run({"recognize", "--model", path("model.json"), "--object",
                      path("data.json"), "--id", "2", "--modalities", "1,3", "--seed", "4"});
  const CliRun r2 = run({"recognize", "--model", path("model.json"), "--object",
                      path("data.json"), "--id", "2", "--modalities", "1,3", "--seed", "4"});
  ASSERT_EQ(r1.code, 0) << r1.err;
  EXPECT_EQ(r1.out, r2.out);
  const Json rj = parse_json(r1.out, "recognize");
  EXPECT_EQ(rj["observed"], Json::parse("[1,3]"));

  for (const char* policy : {"greedy", "lazy", "random"}) {
    const std::vector<std::string> args{"plan", "--model", path("model.json"),
                                        "--object", path("data.json"), "--budget", "2",
                                        "--mc", "80", "--policy", policy, "--seed", "9"};
    const CliRun a = run(args);
    auto par = args;
    par.insert(par.begin(), {"--jobs", "2"});
    const CliRun b = run(par);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out) << policy;
    const Json pj = parse_json(a.out, "plan");
    EXPECT_EQ(pj["steps"].size(), 2u);
    if (std::string(policy) == "greedy") EXPECT_EQ(pj["stats"]["ig_evaluations"], 3 + 2);
  }

  const std::vector<std::string> ex{"experiment", "--data", path("data.json"), "--model",
                                    path("model.json"), "--budget", "3", "--mc", "40",
                                    "--seeds", "2", "--seed", "5", "--out"};
  auto e1 = ex, e2 = ex;
  e1.insert(e1.begin(), {"--jobs", "1"});
  e1.push_back(path("exp1"));
  e2.insert(e2.begin(), {"--jobs", "2"});
  e2.push_back(path("exp2"));
  const CliRun x1 = run(e1);
  ASSERT_EQ(x1.code, 0) << x1.err;
  ASSERT_EQ(run(e2).code, 0);
  for (const char* f : {"detail.csv", "summary.csv", "stats.csv", "report.json", "meta.json"}) {
    EXPECT_EQ(slurp(dir_ / "exp1" / f), slurp(dir_ / "exp2" / f)) << f;
  }
  const Json meta = parse_json(slurp(dir_ / "exp1" / "meta.json"), "meta");
  EXPECT_EQ(meta["config"]["mc"], 40);
  EXPECT_EQ(meta["config"]["jackknife"], false);

  ASSERT_EQ(run({"report", "--in", (dir_ / "exp1" / "report.json").string(), "--out",
                 path("re")})
                .code,
            0);
  for (const char* f : {"detail.csv", "summary.csv", "stats.csv"}) {
    EXPECT_EQ(slurp(dir_ / "exp1" / f), slurp(dir_ / "re" / f)) << f;
  }
  ASSERT_EQ(run({"report", "--in", (dir_ / "exp1" / "report.json").string(), "--format",
                 "json", "--out", path("rj")})
                .code,
            0);
  EXPECT_EQ(slurp(dir_ / "exp1" / "report.json"), slurp(dir_ / "rj" / "report.json"));

  const std::vector<std::string> sw{"sweep", "--model", path("model.json"), "--data",
                                    path("data.json"), "--object", "1", "--modality", "3",
                                    "--counts", "20,40", "--reps", "6", "--seed", "2",
                                    "--out"};
  auto s1 = sw, s2 = sw;
  s1.push_back(path("s1.csv"));
  s2.insert(s2.begin(), {"--jobs", "2"});
  s2.push_back(path("s2.csv"));
  ASSERT_EQ(run(s1).code, 0);
  ASSERT_EQ(run(s2).code, 0);
  EXPECT_EQ(slurp(path("s1.csv")), slurp(path("s2.csv")));
  EXPECT_EQ(slurp(path("s1.csv.meta.json")), slurp(path("s2.csv.meta.json")));
  EXPECT_EQ(slurp(path("s1.csv")).substr(0, 9), "mc_sample");
}

TEST_F(CliTest, InputsAreNotModified) {
  small_pipeline_inputs();
  const std::string d = slurp(path("data.json")), m = slurp(path("model.json"));
  ASSERT_EQ(run({"plan", "--model", path("model.json"), "--object", path("data.json"),
                 "--budget", "1", "--mc", "20", "--seed", "1", "--out", path("p.json")})
                .code,
            0);
  EXPECT_EQ(slurp(path("data.json")), d);
  EXPECT_EQ(slurp(path("model.json")), m);
  EXPECT_TRUE(fs::exists(path("p.json")));
}

TEST(CliHash, ConfigHashIgnoresKeyOrderOnlyThroughTheSerializer) {
  const Json a{{"x", 1}, {"y", 2}};
  const Json m1 = cli::metadata("t", 1, a);
  const Json m2 = cli::metadata("t", 1, a);
  EXPECT_EQ(m1["config_hash"], m2["config_hash"]);
  const Json b{{"x", 1}, {"y", 3}};
  EXPECT_NE(cli::metadata("t", 1, b)["config_hash"], m1["config_hash"]);
}

}  // namespace
}  // namespace mhdp
