/*
 * Copyright 2026 The mia-audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mia/cli.hpp"

namespace mia {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mia_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    spec_ = (dir_ / "spec.json").string();
    std::ofstream(spec_) << R"({
      "num_subgroups": 2, "num_classes": 2, "dim": 2,
      "means": [[[-1, 0], [1, 0]], [[0, -1], [0, 1]]],
      "scales": [[1, 1], [1.5, 1.5]],
      "sizes": [150, 150],
      "class_bias": [[0.5, 0.5], [0.4, 0.6]],
      "seed": 1
    })";
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  std::string spec_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), kExitUsage);
  EXPECT_EQ(run({"frobnicate"}), kExitUsage);
  EXPECT_EQ(run({"audit", "--bogus"}), kExitUsage);
  EXPECT_EQ(run({"audit", "--synthetic", spec_, "--model", "svm"}), kExitUsage);
  EXPECT_EQ(run({"audit", "--synthetic", spec_, "--dataset", "compas"}), kExitUsage);
  EXPECT_EQ(run({"audit", "--synthetic", spec_, "--bins", "1"}), kExitUsage);
  EXPECT_EQ(run({"audit", "--synthetic", spec_, "--model", "dp-logreg"}), kExitUsage);
  EXPECT_EQ(run({"sweep", "--synthetic", spec_, "--kind", "size", "--grid", ""}), kExitUsage);
  EXPECT_EQ(run({"sweep", "--synthetic", spec_, "--kind", "size", "--grid", "10,x"}), kExitUsage);
  EXPECT_EQ(run({"--help"}), kExitOk);
  EXPECT_NE(out_.str().find("verify-identities"), std::string::npos);
}

TEST_F(CliTest, DomainErrors) {
  EXPECT_EQ(run({"audit", "--synthetic", path("missing.json"), "--out", path("o")}), kExitDomain);
  EXPECT_NE(err_.str().find("missing.json"), std::string::npos);
  EXPECT_EQ(run({"significance", "--study", path("nowhere")}), kExitDomain);
  EXPECT_EQ(run({"audit", "--dataset", "compas", "--data-dir", path("empty"), "--out", path("o")}),
            kExitDomain);
}

TEST_F(CliTest, AuditWritesParsableDeterministicOutputs) {
  const std::vector<std::string> args{"audit", "--synthetic", spec_, "--model", "logreg",
                                      "--shuffles", "2", "--seed", "7", "--out", path("a")};
  ASSERT_EQ(run(args), kExitOk) << err_.str();
  for (const auto* f : {"aggregate.json", "study.csv", "records.csv", "profile.json", "profile.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  }
  const auto agg = json::parse(slurp(dir_ / "a" / "aggregate.json"));
  EXPECT_EQ(agg["metadata"]["tool"], "mia-audit");
  EXPECT_EQ(agg["metadata"]["seed"], 7);
  EXPECT_EQ(agg["metadata"]["config"]["shuffles"], 2);
  EXPECT_EQ(agg["shuffles"].size(), 2u);
  const double v = agg["aggregate"]["discriminating"]["vulnerability"]["mean"];
  EXPECT_GE(v, 50.0);
  EXPECT_LE(v, 100.0);

  auto again = args;
  again.back() = path("b");
  ASSERT_EQ(run(again), kExitOk);
  for (const auto* f : {"aggregate.json", "study.csv", "records.csv", "profile.json", "profile.csv"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  const auto target = path("from_env");
  ::setenv("MIA_AUDIT_OUT", target.c_str(), 1);
  const int rc = run({"datagen", "--spec", spec_});
  ::unsetenv("MIA_AUDIT_OUT");
  ASSERT_EQ(rc, kExitOk);
  EXPECT_TRUE(fs::exists(fs::path(target) / "synthetic.csv"));
}

TEST_F(CliTest, VerifyIdentitiesPassesAndCatchesCorruption) {
  ASSERT_EQ(run({"verify-identities", "--synthetic", spec_, "--geo-tables", "4"}), kExitOk) << out_.str();
  EXPECT_EQ(out_.str().find("FAIL"), std::string::npos);
  EXPECT_NE(out_.str().find("no_class_bias_zero_disparity"), std::string::npos);
  EXPECT_EQ(run({"verify-identities", "--synthetic", spec_, "--corrupt", "--geo-tables", "0"}),
            kExitDomain);
  EXPECT_NE(out_.str().find("closed_form.regular"), std::string::npos);
  EXPECT_NE(out_.str().find("FAIL"), std::string::npos);
}

TEST_F(CliTest, SingleSubgroupReportsEqualityBranch) {
  const auto one = path("one.json");
  std::ofstream(one) << R"({"num_subgroups": 1, "num_classes": 2, "dim": 2,
    "means": [[[-1, 0], [1, 0]]], "scales": [[1, 1]], "sizes": [200],
    "class_bias": [[0.5, 0.5]], "seed": 2})";
  ASSERT_EQ(run({"verify-identities", "--synthetic", one, "--geo-tables", "0"}), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("dominance  residual 0  PASS  (equality"), std::string::npos)
      << out_.str();
}

TEST_F(CliTest, AuditFromScoredInput) {
  std::ofstream in(path("scores.csv"));
  in << "id,y,z,m,conf_0,conf_1\n";
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const int m = i % 2, y = (i / 2) % 2, z = (i / 4) % 2;
    const double c = std::min(1.0, u(rng) * 0.7 + (m ? 0.3 : 0.0));
    in << "r" << i << ',' << y << ',' << z << ',' << m << ',' << (y ? 1 - c : c) << ','
       << (y ? c : 1 - c) << '\n';
  }
  in.close();
  ASSERT_EQ(run({"audit", "--input", path("scores.csv"), "--out", path("in")}), kExitOk) << err_.str();
  const auto rep = json::parse(slurp(dir_ / "in" / "report.json"));
  EXPECT_GT(rep["report"]["regular"]["vulnerability"].get<double>(), 50.0);
  EXPECT_TRUE(fs::exists(dir_ / "in" / "evaluation_set.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "in" / "profile.csv"));
}

TEST_F(CliTest, SweepWritesGridCsv) {
  const std::vector<std::string> args{"sweep", "--synthetic", spec_, "--kind", "size", "--target", "0",
                                      "--grid", "40,150", "--shuffles", "2", "--out", path("s")};
  ASSERT_EQ(run(args), kExitOk) << err_.str();
  const auto csv = slurp(dir_ / "s" / "sweep.csv");
  EXPECT_EQ(csv.rfind("target_size,spec_hash,subgroup,adversary,mean,std,count\n", 0), 0u);
  EXPECT_NE(csv.find("\n40,"), std::string::npos);
  EXPECT_NE(csv.find("\n150,"), std::string::npos);
  auto again = args;
  again.back() = path("s2");
  ASSERT_EQ(run(again), kExitOk);
  EXPECT_EQ(slurp(dir_ / "s" / "sweep.json"), slurp(dir_ / "s2" / "sweep.json"));
  EXPECT_EQ(run({"sweep", "--synthetic", spec_, "--kind", "size", "--grid", "40,9999", "--out", path("s3")}),
            kExitDomain);
}

// Study directory with subgroup 0 far more exposed than subgroup 1.
void write_planted_study(const fs::path& dir, double gap) {
  fs::create_directories(dir);
  json agg;
  agg["metadata"]["config"]["bins"] = 2;
  agg["dataset"] = {{"num_classes", 2}, {"num_subgroups", 2}, {"subgroups", {"A", "B"}}};
  std::ofstream(dir / "aggregate.json") << agg.dump(2);
  std::ofstream rec(dir / "records.csv");
  rec << "shuffle,id,y,z,m,bin\n";
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int id = 0;
  for (int s = 0; s < 3; ++s)
    for (int z = 0; z < 2; ++z)
      for (int y = 0; y < 2; ++y)
        for (int i = 0; i < 100; ++i) {
          const double shift = z == 0 ? gap : 0.0;
          rec << s << ",r" << id++ << ',' << y << ',' << z << ",1," << (u(rng) < 0.5 + shift) << '\n';
          rec << s << ",r" << id++ << ',' << y << ',' << z << ",0," << (u(rng) < 0.5 - shift) << '\n';
        }
}

TEST_F(CliTest, SignificanceFlagsPlantedPair) {
  write_planted_study(dir_ / "planted", 0.3);
  EXPECT_EQ(run({"significance", "--study", path("planted"), "--permutations", "50"}), kExitUsage);
  ASSERT_EQ(run({"significance", "--study", path("planted"), "--permutations", "999"}), kExitOk)
      << err_.str();
  const auto sig = json::parse(slurp(dir_ / "planted" / "significance.json"));
  ASSERT_EQ(sig["pairs"].size(), 1u);
  EXPECT_EQ(sig["pairs"][0]["decision"], 1);
  EXPECT_EQ(sig["max_disparity"]["decision"], 1);
  ASSERT_EQ(run({"significance", "--study", path("planted"), "--pair", "A,B", "--permutations", "99",
                 "--out", path("pair")}),
            kExitOk);
  EXPECT_EQ(run({"significance", "--study", path("planted"), "--pair", "A,Q"}), kExitUsage);
}

TEST_F(CliTest, IngestCanonicalCsv) {
  std::ofstream(path("pop.csv")) << "id,y,z,f_0\na,0,0,1.5\nb,1,1,2\n";
  ASSERT_EQ(run({"ingest", "--dataset", path("pop.csv"), "--out", path("ing")}), kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "ing" / "pop.csv"));
  const auto man = json::parse(slurp(dir_ / "ing" / "pop.manifest.json"));
  EXPECT_EQ(man["manifest"]["examples"], 2);
}

}  // namespace
}  // namespace mia
