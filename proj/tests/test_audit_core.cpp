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

#include "mia/audit_core.hpp"
#include "mia/errors.hpp"
#include "test_util.hpp"

namespace mia {
namespace {

using testing::eight_record_set;
using testing::make_set;

TEST(Discretize, BinBoundaries) {
  const std::vector<double> lo{0.0, 1.0}, hi{1.0, 0.0}, mid{0.55, 0.45};
  EXPECT_EQ(discretize_confidence(lo, 0, 10), 0);
  EXPECT_EQ(discretize_confidence(hi, 0, 10), 9);
  EXPECT_EQ(discretize_confidence(mid, 0, 10), 5);
  EXPECT_EQ(discretize_confidence(mid, 1, 10), 4);
}

TEST(Discretize, RejectsUnnormalizedVector) {
  const std::vector<double> bad{0.7, 0.7};
  try {
    discretize_confidence(bad, 0, 10);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("sum = 1.4"), std::string::npos) << e.what();
  }
}

TEST(Discretize, RejectsBadArguments) {
  const std::vector<double> ok{0.5, 0.5};
  EXPECT_THROW(discretize_confidence(ok, 2, 10), ValidationError);
  EXPECT_THROW(discretize_confidence(ok, 0, 1), ValidationError);
}

std::vector<ScoredExample> pool(const std::string& prefix, int y, int z, int n, double conf) {
  std::vector<ScoredExample> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({prefix + std::to_string(i), y, z, {1.0 - conf, conf}});
  }
  return out;
}

TEST(BuildEvaluationSet, MinRulePerCell) {
  const auto members = pool("in", 0, 0, 5, 0.9);
  const auto nonmembers = pool("out", 0, 0, 3, 0.2);
  const auto built = build_evaluation_set(members, nonmembers, 2, 1, 10, 1);
  int m1 = 0, m0 = 0;
  for (const auto& r : built.set.records()) (r.member ? m1 : m0)++;
  EXPECT_EQ(m1, 3);
  EXPECT_EQ(m0, 3);
}

TEST(BuildEvaluationSet, IdenticalPoolsGiveEqualHalves) {
  auto a = pool("a", 1, 0, 7, 0.6);
  auto b = pool("b", 1, 0, 7, 0.6);
  const auto extra_a = pool("c", 0, 1, 4, 0.3), extra_b = pool("d", 0, 1, 4, 0.3);
  a.insert(a.end(), extra_a.begin(), extra_a.end());
  b.insert(b.end(), extra_b.begin(), extra_b.end());
  const auto built = build_evaluation_set(a, b, 2, 2, 10, 3);
  int m1 = 0;
  for (const auto& r : built.set.records()) m1 += r.member;
  EXPECT_EQ(built.set.size(), 22u);
  EXPECT_EQ(m1, 11);
}

TEST(BuildEvaluationSet, DeterministicForFixedSeed) {
  const auto members = pool("in", 0, 0, 50, 0.9);
  const auto nonmembers = pool("out", 0, 0, 20, 0.2);
  const auto a = build_evaluation_set(members, nonmembers, 2, 1, 10, 42);
  const auto b = build_evaluation_set(members, nonmembers, 2, 1, 10, 42);
  ASSERT_EQ(a.set.size(), b.set.size());
  for (std::size_t i = 0; i < a.set.size(); ++i) {
    EXPECT_EQ(a.set.records()[i].id, b.set.records()[i].id);
    EXPECT_EQ(a.set.records()[i].bin, b.set.records()[i].bin);
  }
}

TEST(BuildEvaluationSet, OneSidedCellIsDroppedAndReported) {
  auto members = pool("in", 0, 0, 4, 0.9);
  const auto lonely = pool("lonely", 1, 1, 6, 0.9);
  members.insert(members.end(), lonely.begin(), lonely.end());
  const auto nonmembers = pool("out", 0, 0, 4, 0.2);
  const auto built = build_evaluation_set(members, nonmembers, 2, 2, 10, 0);
  EXPECT_EQ(built.set.size(), 8u);
  ASSERT_EQ(built.dropped_cells.size(), 1u);
  EXPECT_EQ(built.dropped_cells[0].label, 1);
  EXPECT_EQ(built.dropped_cells[0].subgroup, 1);
  EXPECT_EQ(built.dropped_cells[0].member_count, 6u);
  EXPECT_EQ(built.dropped_cells[0].nonmember_count, 0u);
}

TEST(BuildEvaluationSet, ErrorsWhenNothingIntersects) {
  const auto members = pool("in", 0, 0, 4, 0.9);
  const auto nonmembers = pool("out", 1, 0, 4, 0.2);
  EXPECT_THROW(build_evaluation_set(members, nonmembers, 2, 1, 10, 0), ValidationError);
  EXPECT_THROW(build_evaluation_set({}, nonmembers, 2, 1, 10, 0), ValidationError);
}

TEST(EvaluationSet, RejectsUnbalancedCells) {
  EXPECT_THROW(make_set({{0, 0, 1, 0}, {0, 0, 1, 1}, {0, 0, 0, 0}}, 2, 1, 1), ValidationError);
}

TEST(EvaluationSet, RejectsOutOfRangeFields) {
  EXPECT_THROW(make_set({{0, 0, 1, 2}, {0, 0, 0, 0}}, 2, 1, 1), ValidationError);
  EXPECT_THROW(make_set({{1, 0, 1, 0}, {1, 0, 0, 0}}, 2, 1, 1), ValidationError);
  EXPECT_THROW(make_set({{0, 3, 1, 0}, {0, 3, 0, 0}}, 2, 1, 1), ValidationError);
}

TEST(FrequencyTable, HandTallyOfEightRecords) {
  const auto t = estimate_tables(eight_record_set());
  EXPECT_DOUBLE_EQ(*t.conditional(1, 0, 1), 0.75);
  EXPECT_DOUBLE_EQ(*t.conditional(1, 0, 0), 0.25);
  EXPECT_DOUBLE_EQ(*t.conditional(0, 0, 1), 0.25);
  EXPECT_DOUBLE_EQ(*t.conditional(0, 0, 0), 0.75);
  EXPECT_EQ(t.total(), 8);
  EXPECT_EQ(t.class_total(1, 0), 4);
  EXPECT_DOUBLE_EQ(t.pr_y(0), 1.0);
  EXPECT_DOUBLE_EQ(t.pr_z(0), 1.0);
}

TEST(FrequencyTable, IdenticalRecordsGivePointMasses) {
  const auto t = estimate_tables(make_set({{0, 0, 1, 3}, {0, 0, 1, 3}, {0, 0, 0, 3}, {0, 0, 0, 3}}, 10, 1, 1));
  for (int b = 0; b < 10; ++b) {
    EXPECT_DOUBLE_EQ(*t.conditional(b, 0, 1), b == 3 ? 1.0 : 0.0);
    EXPECT_DOUBLE_EQ(*t.conditional(b, 0, 0), b == 3 ? 1.0 : 0.0);
  }
}

TEST(FrequencyTable, EmptyCellsHaveNoConditional) {
  const auto t = estimate_tables(make_set({{0, 0, 1, 1}, {0, 0, 0, 0}}, 2, 2, 2));
  EXPECT_FALSE(t.conditional(0, 1, 1).has_value());
  EXPECT_FALSE(t.conditional(0, 0, 1, 1).has_value());
  EXPECT_TRUE(t.conditional(0, 0, 0, 1).has_value());
}

TEST(FrequencyTable, SubgroupMarginals) {
  const auto t = estimate_tables(make_set(
      {{0, 0, 1, 0}, {0, 0, 0, 1}, {1, 1, 1, 1}, {1, 1, 0, 1}, {0, 1, 1, 0}, {0, 1, 0, 0}}, 2, 2, 2));
  EXPECT_DOUBLE_EQ(t.pr_z(0), 2.0 / 6);
  EXPECT_DOUBLE_EQ(t.pr_z(1), 4.0 / 6);
  EXPECT_DOUBLE_EQ(t.pr_yz(1, 1), 2.0 / 6);
  EXPECT_EQ(t.count(1, 0, 0), 2);
  EXPECT_EQ(t.count(1, 0, 1, 0), 1);
}

TEST(FrequencyTable, AddCountKeepsTotalsConsistent) {
  auto t = estimate_tables(eight_record_set());
  t.add_count(1, 0, 0, 1, -1);
  t.add_count(1, 0, 0, 0, 1);
  EXPECT_EQ(t.count(1, 0, 1), 2);
  EXPECT_EQ(t.count(1, 0, 0, 0), 2);
  EXPECT_EQ(t.total(), 8);
  EXPECT_THROW(t.add_count(0, 0, 0, 1, -5), ValidationError);
}

TEST(Population, ValidateCatchesBadExamples) {
  Population p;
  p.num_classes = 2;
  p.num_subgroups = 1;
  p.subgroup_names = {"a"};
  p.examples = {{"x", {1.0}, 0, 0}, {"x", {2.0}, 1, 0}};
  EXPECT_THROW(p.validate(), ValidationError);
  p.examples[1].id = "y";
  EXPECT_NO_THROW(p.validate());
  p.examples[1].features = {1.0, 2.0};
  EXPECT_THROW(p.validate(), ValidationError);
}

}  // namespace
}  // namespace mia
