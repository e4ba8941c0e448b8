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

// Experimental protocols: repeated train/test shuffles audited end to end,
// a permutation test for disparity, synthetic populations and the two
// subgroup sweeps.

#ifndef MIA_EXPERIMENTS_HPP_
#define MIA_EXPERIMENTS_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mia/adversary.hpp"
#include "mia/audit_core.hpp"
#include "mia/models.hpp"
#include "mia/overfit.hpp"

namespace mia {

// Trains on (x, y, z); `seed` is the shuffle's model seed.
using Trainer = std::function<TrainedModel(const Eigen::MatrixXd& x, const Eigen::VectorXi& y,
                                           std::span<const int> z, int num_classes,
                                           int num_subgroups, std::uint64_t seed)>;

struct ModelRecipe {
  std::string name;
  TrainConfig config;
  // When positive, config.l2_strength is replaced by l2_per_example / n_train
  // (the C = 1/(lambda n) convention of liblinear-style solvers).
  double l2_per_example = 0.0;
  bool equalized_odds = false;
  // Overrides the built-in training when set (tests use it for null models).
  Trainer trainer;
};

// logreg | mlp6 | mlp100 | mlp500 | dp-logreg | eo-logreg. `epsilon` is
// required for dp-logreg and rejected otherwise.
ModelRecipe make_recipe(const std::string& name, std::optional<double> epsilon = std::nullopt);
const std::vector<std::string>& recipe_names();

TrainedModel train_recipe(const ModelRecipe& recipe, const Eigen::MatrixXd& x,
                          const Eigen::VectorXi& y, std::span<const int> z, int num_classes,
                          int num_subgroups, std::uint64_t seed);

// Accuracy of the model's predicted class. Randomized (EO) models are scored
// by their expected accuracy, mean conf[y].
double model_accuracy(const TrainedModel& model, const Eigen::MatrixXd& x,
                      const Eigen::VectorXi& y, std::span<const int> z);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified by (y, z): each cell contributes round(fraction * size) to train.
Split stratified_split(const Population& pop, double train_fraction, std::uint64_t seed);

struct StudyOptions {
  int n_shuffles = 35;
  std::uint64_t base_seed = 0;
  int bins = 10;
  double train_fraction = 0.5;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  int count = 0;
};

MeanStd mean_std(std::span<const double> values);

struct ShuffleResult {
  int index = 0;
  std::uint64_t seed = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double overfitting = 0.0;  // train - test accuracy
  VulnerabilityReport report;
  OverfitProfile profile;
  EvaluationSet set;
  std::vector<DroppedCell> dropped_cells;
};

struct StudyAggregate {
  MeanStd train_accuracy;
  MeanStd test_accuracy;
  MeanStd overfitting;
  MeanStd regular;
  MeanStd discriminating;
  MeanStd regular_max_disparity;
  MeanStd discriminating_max_disparity;
  std::vector<MeanStd> regular_by_subgroup;         // over shuffles where defined
  std::vector<MeanStd> discriminating_by_subgroup;
};

struct ShuffleStudy {
  std::string dataset;
  std::string recipe;
  StudyOptions options;
  std::vector<std::string> subgroup_names;
  std::vector<ShuffleResult> shuffles;
  StudyAggregate aggregate;
};

StudyAggregate aggregate_shuffles(const std::vector<ShuffleResult>& shuffles, int num_subgroups);

// Shuffle i uses seed base_seed + i for its split, model and evaluation set.
ShuffleStudy run_shuffle_study(const Population& pop, const ModelRecipe& recipe,
                               const StudyOptions& options, const std::string& dataset = "");

// Audits one trained model given its member and non-member examples.
ShuffleResult audit_split(const Population& pop, const Split& split, const TrainedModel& model,
                          int bins, std::uint64_t seed);

// --- Permutation test -----------------------------------------------------

struct DisparityStatistic {
  // Both set: |mean over shuffles of (V_z - V_z')|. Unset: mean over
  // shuffles of the max pairwise disparity.
  std::optional<int> subgroup;
  std::optional<int> other_subgroup;
};

struct PermutationResult {
  double observed = 0.0;
  double p_value = 1.0;
  int n_permutations = 0;
};

// Subgroup labels are permuted within each (shuffle, y, m) stratum, which
// keeps every evaluation set balanced and stratified; the adversary is refit
// on each permuted set. p = (1 + #{perm >= observed}) / (1 + n).
PermutationResult permutation_disparity_test(std::span<const EvaluationSet> sets,
                                             AdversaryKind kind, const DisparityStatistic& stat,
                                             int n_permutations, std::uint64_t seed);

// Observed value of the statistic, without permutation.
double disparity_statistic(std::span<const EvaluationSet> sets, AdversaryKind kind,
                           const DisparityStatistic& stat);

struct PairTest {
  int subgroup = 0;
  int other_subgroup = 0;
  double observed = 0.0;
  double p_value = 1.0;
  double threshold = 0.0;  // alpha / number of pairs
  bool significant = false;
};

// Every pair of subgroups with records in some set, Bonferroni-corrected
// at `alpha`.
std::vector<PairTest> pairwise_permutation_tests(std::span<const EvaluationSet> sets,
                                                 AdversaryKind kind, int n_permutations,
                                                 std::uint64_t seed, double alpha = 0.005);

// --- Synthetic populations ------------------------------------------------

struct SyntheticSpec {
  int num_subgroups = 2;
  int num_classes = 2;
  int dim = 2;
  std::vector<std::vector<std::vector<double>>> means;  // [z][y][dim]
  std::vector<std::vector<double>> scales;              // [z][y]
  std::vector<int> sizes;                               // [z]
  std::vector<std::vector<double>> class_bias;          // [z][y], rows sum to 1
  std::uint64_t seed = 0;

  void validate() const;
};

SyntheticSpec parse_synthetic_spec(const std::string& json_text);
std::string synthetic_spec_to_json(const SyntheticSpec& spec);
SyntheticSpec load_synthetic_spec(const std::string& path);

// Labels are drawn from class_bias[z], features from N(mean, scale^2 I).
// Each subgroup has its own stream, so a subgroup's first n examples do not
// depend on its own total size or on the other subgroups.
Population synth_generate(const SyntheticSpec& spec);

// Hex digest of the spec with the sizes of `masked_subgroups` left out.
std::string spec_fingerprint(const SyntheticSpec& spec, std::span<const int> masked_subgroups = {});

struct SweepPoint {
  int value = 0;
  std::string spec_hash;  // of the non-swept parameters
  StudyAggregate aggregate;
};

struct SweepResult {
  std::string variable;  // "target_size" or "per_group_train_size"
  std::optional<int> target;
  std::vector<SweepPoint> points;
};

// Varies the target subgroup's population size over `grid` (each value at
// most spec.sizes[target]); all other parameters stay fixed.
SweepResult subgroup_size_sweep(const SyntheticSpec& spec, int target, std::span<const int> grid,
                                const ModelRecipe& recipe, const StudyOptions& options);

// Every subgroup gets K training and K test examples (2K drawn, each at most
// its spec size).
SweepResult equal_representation_sweep(const SyntheticSpec& spec, std::span<const int> grid,
                                        const ModelRecipe& recipe, const StudyOptions& options);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace mia

#endif  // MIA_EXPERIMENTS_HPP_
