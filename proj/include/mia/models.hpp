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

// Target classifiers audited by the toolkit: L2-regularized logistic
// regression, a one-hidden-layer ReLU network, an output-perturbed
// differentially private logistic regression, and an equalized-odds
// post-processor on top of a binary scorer.
//
// Binary tasks use a single logit row (sigmoid); p > 2 uses p rows (softmax).
// All training is deterministic given TrainConfig::seed.

#ifndef MIA_MODELS_HPP_
#define MIA_MODELS_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mia/audit_core.hpp"

namespace mia {

enum class ScalingKind { kIdentity, kStandard, kMinMax };
enum class OptimizerKind { kGradientDescent, kAdam };

// x' = (x - offset) .* scale, then (min-max only) clipped to [0, 1] and
// rows rescaled to norm <= max_row_norm when that is positive.
struct FeatureScaler {
  ScalingKind kind = ScalingKind::kIdentity;
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;
  double max_row_norm = 0.0;

  static FeatureScaler fit(ScalingKind kind, const Eigen::MatrixXd& x, double max_row_norm = 0.0);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
};

struct TrainConfig {
  double l2_strength = 0.0;  // lambda in mean_loss + lambda/2 ||W||^2
  int epochs = 500;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  int hidden_units = 0;
  std::optional<double> dp_epsilon;
  OptimizerKind optimizer = OptimizerKind::kGradientDescent;
  int batch_size = 0;  // 0 = full batch
  ScalingKind scaling = ScalingKind::kStandard;
};

struct LinearModel {
  Eigen::MatrixXd weights;  // r x d, r = 1 for binary
  Eigen::VectorXd bias;     // r
  int num_classes = 2;
  FeatureScaler scaler;
};

struct MLPModel {
  Eigen::MatrixXd hidden_weights;  // h x d
  Eigen::VectorXd hidden_bias;     // h
  Eigen::MatrixXd output_weights;  // r x h
  Eigen::VectorXd output_bias;     // r
  int num_classes = 2;
  FeatureScaler scaler;

  int hidden_units() const { return static_cast<int>(hidden_bias.size()); }
};

// Per-subgroup randomized decision: accept with probability
// w_threshold * 1[score >= threshold] + w_one. The three weights are a point
// of the simplex (w_threshold + w_zero + w_one = 1).
struct EOGroupPolicy {
  double threshold = 0.5;
  double w_threshold = 1.0;
  double w_zero = 0.0;
  double w_one = 0.0;
};

struct EOPolicy {
  std::vector<EOGroupPolicy> groups;
  double target_fpr = 0.0;
  double target_tpr = 0.0;

  double acceptance(double score, int subgroup) const;
};

struct EOModel {
  LinearModel base;
  EOPolicy policy;
};

using TrainedModel = std::variant<LinearModel, MLPModel, EOModel>;

// Design matrix and label vector for the examples at `indices`.
Eigen::MatrixXd design_matrix(const Population& pop, std::span<const std::size_t> indices);
Eigen::VectorXi label_vector(const Population& pop, std::span<const std::size_t> indices);

struct LinearGradient {
  double loss = 0.0;
  Eigen::MatrixXd d_weights;
  Eigen::VectorXd d_bias;
};

// Mean cross-entropy plus lambda/2 ||W||^2 (and the bias when
// `penalize_bias`) on already-scaled inputs.
LinearGradient linear_loss_and_gradient(const LinearModel& model, const Eigen::MatrixXd& x,
                                        const Eigen::VectorXi& y, double l2, bool penalize_bias);

struct MLPGradient {
  double loss = 0.0;
  Eigen::MatrixXd d_hidden_weights;
  Eigen::VectorXd d_hidden_bias;
  Eigen::MatrixXd d_output_weights;
  Eigen::VectorXd d_output_bias;
};

MLPGradient mlp_loss_and_gradient(const MLPModel& model, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXi& y, double l2);

LinearModel train_logreg(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, int num_classes,
                         const TrainConfig& cfg);
MLPModel train_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, int num_classes,
                   const TrainConfig& cfg);
// Min-max scales, caps row norms at sqrt(d), fits the penalized logistic
// regression and perturbs (W, b) with noise of density proportional to
// exp(-||noise|| / beta), beta = 2 L R / (n lambda epsilon).
LinearModel train_dp_logreg(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, int num_classes,
                            const TrainConfig& cfg);

// Scale beta of the output perturbation; the expected noise norm is beta
// times the number of perturbed parameters.
double dp_noise_scale(std::size_t n, std::size_t d, int num_classes, double l2, double epsilon);

struct CalibrationPoint {
  double score = 0.0;  // model's Pr[y = 1]
  int label = 0;
  int subgroup = 0;
};

// Per-subgroup mixing of (thresholded score, constant 0, constant 1) that
// equalizes every group's expected (FPR, TPR) at the common point minimizing
// calibration error. Throws ValidationError if a group lacks positives or
// negatives, or if the realized rates differ by more than `tol`.
EOPolicy eo_postprocess(std::span<const CalibrationPoint> points, int num_subgroups,
                        std::span<const double> threshold_grid, double tol = 0.02);

// Expected (FPR, TPR) of `policy` for one subgroup on `points`.
std::pair<double, double> eo_group_rates(const EOPolicy& policy,
                                         std::span<const CalibrationPoint> points, int subgroup);

std::vector<double> default_threshold_grid();

// Class-probability vector; sums to 1.
std::vector<double> predict_confidence(const TrainedModel& model, std::span<const double> features,
                                       int subgroup = 0);
// Row-wise batch version over raw features.
Eigen::MatrixXd predict_confidences(const TrainedModel& model, const Eigen::MatrixXd& x,
                                    std::span<const int> subgroups);

int model_feature_count(const TrainedModel& model);

void save_model(const std::string& path, const TrainedModel& model, const TrainConfig& cfg);
std::pair<TrainedModel, TrainConfig> load_model(const std::string& path);

}  // namespace mia

#endif  // MIA_MODELS_HPP_
