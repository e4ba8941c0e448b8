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

#include <cmath>
#include <filesystem>
#include <random>

#include "mia/errors.hpp"
#include "mia/models.hpp"
#include "mia/random.hpp"

namespace mia {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

// Two Gaussian clusters at +-sep along every axis.
void blobs(int n, int d, double sep, std::uint64_t seed, MatrixXd& x, VectorXi& y) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  x.resize(n, d);
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    y(i) = i % 2;
    for (int j = 0; j < d; ++j) x(i, j) = (y(i) ? sep : -sep) + noise(rng);
  }
}

double accuracy(const TrainedModel& m, const MatrixXd& x, const VectorXi& y) {
  const std::vector<int> z(static_cast<std::size_t>(x.rows()), 0);
  const auto probs = predict_confidences(m, x, z);
  int hits = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    hits += arg == y(i);
  }
  return static_cast<double>(hits) / static_cast<double>(x.rows());
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

TEST(Gradients, LinearMatchesFiniteDifferences) {
  auto rng = make_rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 7, d = 4, p = 2 + trial % 3;
    MatrixXd x(n, d);
    VectorXi y(n);
    for (int i = 0; i < n; ++i) {
      y(i) = i % p;
      for (int j = 0; j < d; ++j) x(i, j) = g(rng);
    }
    LinearModel m;
    m.num_classes = p;
    const int r = p == 2 ? 1 : p;
    m.weights = MatrixXd::NullaryExpr(r, d, [&] { return g(rng); });
    m.bias = VectorXd::NullaryExpr(r, [&] { return g(rng); });
    const bool pen = trial % 2 == 0;
    const auto an = linear_loss_and_gradient(m, x, y, 0.3, pen);
    const double h = 1e-6;
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < d; ++j) {
        auto a = m, b = m;
        a.weights(i, j) += h;
        b.weights(i, j) -= h;
        const double fd = (linear_loss_and_gradient(a, x, y, 0.3, pen).loss -
                           linear_loss_and_gradient(b, x, y, 0.3, pen).loss) / (2 * h);
        EXPECT_LT(rel_err(fd, an.d_weights(i, j)), 1e-5);
      }
      auto a = m, b = m;
      a.bias(i) += h;
      b.bias(i) -= h;
      const double fd = (linear_loss_and_gradient(a, x, y, 0.3, pen).loss -
                         linear_loss_and_gradient(b, x, y, 0.3, pen).loss) / (2 * h);
      EXPECT_LT(rel_err(fd, an.d_bias(i)), 1e-5);
    }
  }
}

TEST(Gradients, MlpMatchesFiniteDifferences) {
  auto rng = make_rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 6, d = 3, h_units = 4, p = 2 + trial % 2;
    MatrixXd x(n, d);
    VectorXi y(n);
    for (int i = 0; i < n; ++i) {
      y(i) = i % p;
      for (int j = 0; j < d; ++j) x(i, j) = g(rng);
    }
    const int r = p == 2 ? 1 : p;
    MLPModel m;
    m.num_classes = p;
    m.hidden_weights = MatrixXd::NullaryExpr(h_units, d, [&] { return g(rng); });
    m.hidden_bias = VectorXd::NullaryExpr(h_units, [&] { return g(rng); });
    m.output_weights = MatrixXd::NullaryExpr(r, h_units, [&] { return g(rng); });
    m.output_bias = VectorXd::NullaryExpr(r, [&] { return g(rng); });
    const auto an = mlp_loss_and_gradient(m, x, y, 0.05);
    const double h = 1e-6;
    auto check = [&](auto getter, const MatrixXd& analytic) {
      for (Eigen::Index i = 0; i < analytic.rows(); ++i)
        for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
          auto a = m, b = m;
          getter(a)(i, j) += h;
          getter(b)(i, j) -= h;
          const double fd = (mlp_loss_and_gradient(a, x, y, 0.05).loss -
                             mlp_loss_and_gradient(b, x, y, 0.05).loss) / (2 * h);
          EXPECT_LT(rel_err(fd, analytic(i, j)), 1e-5);
        }
    };
    check([](MLPModel& k) -> MatrixXd& { return k.hidden_weights; }, an.d_hidden_weights);
    check([](MLPModel& k) -> MatrixXd& { return k.output_weights; }, an.d_output_weights);
    for (Eigen::Index i = 0; i < m.hidden_bias.size(); ++i) {
      auto a = m, b = m;
      a.hidden_bias(i) += h;
      b.hidden_bias(i) -= h;
      const double fd = (mlp_loss_and_gradient(a, x, y, 0.05).loss -
                         mlp_loss_and_gradient(b, x, y, 0.05).loss) / (2 * h);
      EXPECT_LT(rel_err(fd, an.d_hidden_bias(i)), 1e-5);
    }
  }
}

TEST(Logreg, SeparableClustersAreLearned) {
  MatrixXd x;
  VectorXi y;
  blobs(200, 2, 4.0, 3, x, y);
  TrainConfig cfg;
  cfg.l2_strength = 1e-4;
  EXPECT_GE(accuracy(train_logreg(x, y, 2, cfg), x, y), 0.99);
}

TEST(Logreg, StrongRegularizationShrinksToUniform) {
  MatrixXd x;
  VectorXi y;
  blobs(100, 3, 1.0, 4, x, y);
  TrainConfig cfg;
  cfg.l2_strength = 1e6;
  cfg.learning_rate = 1e-7;
  cfg.epochs = 2000;
  const auto m = train_logreg(x, y, 2, cfg);
  EXPECT_LT(m.weights.norm(), 1e-3);
  const auto c = predict_confidence(m, std::vector<double>{1.0, 1.0, 1.0});
  EXPECT_NEAR(c[0], 0.5, 0.01);
}

TEST(Logreg, DeterministicAndMulticlass) {
  MatrixXd x(9, 2);
  VectorXi y(9);
  for (int i = 0; i < 9; ++i) {
    y(i) = i % 3;
    x(i, 0) = 5.0 * (i % 3) + 0.1 * i;
    x(i, 1) = -2.0 * (i % 3);
  }
  TrainConfig cfg;
  cfg.l2_strength = 1e-3;
  const auto a = train_logreg(x, y, 3, cfg), b = train_logreg(x, y, 3, cfg);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.weights.rows(), 3);
  EXPECT_GE(accuracy(a, x, y), 0.99);
}

TEST(Logreg, SingleClassIsDegenerate) {
  MatrixXd x = MatrixXd::Ones(4, 2);
  VectorXi y = VectorXi::Zero(4);
  EXPECT_THROW(train_logreg(x, y, 2, TrainConfig{}), ValidationError);
}

void xor_data(int n, std::uint64_t seed, MatrixXd& x, VectorXi& y) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, 0.15);
  x.resize(n, 2);
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    const int a = i % 2, b = (i / 2) % 2;
    x(i, 0) = (a ? 1.0 : -1.0) + noise(rng);
    x(i, 1) = (b ? 1.0 : -1.0) + noise(rng);
    y(i) = a ^ b;
  }
}

TEST(Mlp, LearnsXor) {
  MatrixXd x;
  VectorXi y;
  xor_data(200, 5, x, y);
  TrainConfig lr;
  EXPECT_LE(accuracy(train_logreg(x, y, 2, lr), x, y), 0.76);
  TrainConfig cfg;
  cfg.hidden_units = 6;
  cfg.optimizer = OptimizerKind::kAdam;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 50;
  cfg.epochs = 300;
  // Six ReLUs occasionally start in a dead configuration; most inits solve it.
  int solved = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    solved += accuracy(train_mlp(x, y, 2, cfg), x, y) > 0.9;
  }
  EXPECT_GE(solved, 4);
}

TEST(Mlp, WideNetworkOverfitsSmallData) {
  MatrixXd x, xt;
  VectorXi y, yt;
  blobs(60, 10, 0.3, 6, x, y);
  blobs(2000, 10, 0.3, 7, xt, yt);
  TrainConfig cfg;
  cfg.hidden_units = 500;
  cfg.optimizer = OptimizerKind::kAdam;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 300;
  const auto m = train_mlp(x, y, 2, cfg);
  EXPECT_GT(accuracy(m, x, y) - accuracy(m, xt, yt), 0.05);
}

TEST(Mlp, ZeroEpochsIsNearChance) {
  MatrixXd x, xt;
  VectorXi y, yt;
  blobs(200, 4, 0.0, 8, x, y);
  TrainConfig cfg;
  cfg.hidden_units = 6;
  cfg.epochs = 0;
  const auto m = train_mlp(x, y, 2, cfg);
  EXPECT_NEAR(accuracy(m, x, y), 0.5, 0.15);
  EXPECT_EQ(m.hidden_units(), 6);
}

TEST(Confidence, ZeroWeightsGiveUniform) {
  LinearModel m;
  m.num_classes = 3;
  m.weights = MatrixXd::Zero(3, 2);
  m.bias = VectorXd::Zero(3);
  const auto c = predict_confidence(m, std::vector<double>{0.3, -2.0});
  for (double v : c) EXPECT_NEAR(v, 1.0 / 3, 1e-15);
}

TEST(Confidence, LargeLogitGap) {
  LinearModel m;
  m.num_classes = 3;
  m.weights = MatrixXd::Zero(3, 1);
  m.bias = VectorXd(3);
  m.bias << 10.0, -10.0, -10.0;
  EXPECT_GT(predict_confidence(m, std::vector<double>{0.0})[0], 0.9999);
  LinearModel bin;
  bin.weights = MatrixXd::Zero(1, 1);
  bin.bias = VectorXd::Constant(1, -20.0);
  EXPECT_GT(predict_confidence(bin, std::vector<double>{0.0})[0], 0.9999);
}

TEST(Confidence, RowsSumToOne) {
  auto rng = make_rng(12);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    MLPModel m;
    m.num_classes = 2 + trial % 3;
    const int r = m.num_classes == 2 ? 1 : m.num_classes;
    m.hidden_weights = MatrixXd::NullaryExpr(5, 3, [&] { return g(rng); });
    m.hidden_bias = VectorXd::NullaryExpr(5, [&] { return g(rng); });
    m.output_weights = MatrixXd::NullaryExpr(r, 5, [&] { return g(rng); });
    m.output_bias = VectorXd::NullaryExpr(r, [&] { return g(rng); });
    const MatrixXd x = MatrixXd::NullaryExpr(10, 3, [&] { return g(rng); });
    const std::vector<int> z(10, 0);
    const auto probs = predict_confidences(m, x, z);
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      EXPECT_NEAR(probs.row(i).sum(), 1.0, 1e-12);
      EXPECT_GE(probs.row(i).minCoeff(), 0.0);
    }
  }
  LinearModel lm;
  lm.weights = MatrixXd::Zero(1, 3);
  lm.bias = VectorXd::Zero(1);
  EXPECT_THROW(predict_confidence(lm, std::vector<double>{1.0}), ValidationError);
}

TEST(DpLogreg, RejectsMissingPrivacyBudget) {
  MatrixXd x;
  VectorXi y;
  blobs(50, 2, 1.0, 9, x, y);
  TrainConfig cfg;
  cfg.l2_strength = 0.1;
  EXPECT_THROW(train_dp_logreg(x, y, 2, cfg), ValidationError);
  cfg.dp_epsilon = 0.0;
  EXPECT_THROW(train_dp_logreg(x, y, 2, cfg), ValidationError);
  cfg.dp_epsilon = 1.0;
  cfg.l2_strength = 0.0;
  EXPECT_THROW(train_dp_logreg(x, y, 2, cfg), ValidationError);
}

TEST(DpLogreg, HugeEpsilonMatchesNonPrivateFit) {
  MatrixXd x;
  VectorXi y;
  blobs(200, 3, 1.0, 10, x, y);
  TrainConfig cfg;
  cfg.l2_strength = 0.1;
  cfg.dp_epsilon = 1e6;
  const auto a = train_dp_logreg(x, y, 2, cfg);
  cfg.dp_epsilon = 1e12;
  const auto b = train_dp_logreg(x, y, 2, cfg);
  EXPECT_LT((a.weights - b.weights).norm(), 1e-3);
  EXPECT_LT(std::abs(a.bias(0) - b.bias(0)), 1e-3);
}

TEST(DpLogreg, SameSeedSameNoise) {
  MatrixXd x;
  VectorXi y;
  blobs(100, 3, 1.0, 11, x, y);
  TrainConfig cfg;
  cfg.l2_strength = 0.1;
  cfg.dp_epsilon = 1.0;
  cfg.seed = 4;
  EXPECT_EQ(train_dp_logreg(x, y, 2, cfg).weights, train_dp_logreg(x, y, 2, cfg).weights);
  cfg.seed = 5;
  const auto other = train_dp_logreg(x, y, 2, cfg).weights;
  cfg.seed = 4;
  EXPECT_NE(train_dp_logreg(x, y, 2, cfg).weights, other);
}

TEST(DpLogreg, NoiseNormScalesInverselyWithEpsilon) {
  MatrixXd x;
  VectorXi y;
  blobs(100, 3, 1.0, 12, x, y);
  TrainConfig cfg;
  cfg.l2_strength = 0.5;
  cfg.dp_epsilon = 1e12;
  const auto clean = train_dp_logreg(x, y, 2, cfg);
  auto mean_noise = [&](double eps) {
    double total = 0.0;
    cfg.dp_epsilon = eps;
    for (int s = 0; s < 400; ++s) {
      cfg.seed = static_cast<std::uint64_t>(s);
      const auto m = train_dp_logreg(x, y, 2, cfg);
      const double dw = (m.weights - clean.weights).squaredNorm();
      const double db = (m.bias - clean.bias).squaredNorm();
      total += std::sqrt(dw + db);
    }
    return total / 400;
  };
  const double n1 = mean_noise(1.0), n2 = mean_noise(2.0);
  EXPECT_NEAR(n1 / n2, 2.0, 0.15);
  // Gamma(dims, beta) has mean dims * beta.
  EXPECT_NEAR(n1, 4 * dp_noise_scale(100, 3, 2, 0.5, 1.0), 0.1 * n1);
}

TEST(DpLogreg, LowerEpsilonDoesNotHelpAccuracy) {
  MatrixXd x, xt;
  VectorXi y, yt;
  blobs(2000, 5, 0.5, 13, x, y);
  blobs(2000, 5, 0.5, 14, xt, yt);
  TrainConfig cfg;
  cfg.l2_strength = 100.0 / 2000;
  double acc1 = 0.0, acc75 = 0.0;
  for (int s = 0; s < 25; ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.dp_epsilon = 1.0;
    acc1 += accuracy(train_dp_logreg(x, y, 2, cfg), xt, yt);
    cfg.dp_epsilon = 7.5;
    acc75 += accuracy(train_dp_logreg(x, y, 2, cfg), xt, yt);
  }
  EXPECT_LE(acc1, acc75);
}

std::vector<CalibrationPoint> two_group_scores(std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CalibrationPoint> pts;
  for (int z = 0; z < 2; ++z) {
    const double base = z == 0 ? 0.3 : 0.6;
    for (int i = 0; i < 1000; ++i) {
      const int y = u(rng) < base ? 1 : 0;
      // Group 1 scores are shifted up, so raw thresholds are not EO.
      const double s = std::clamp(0.25 * y + 0.2 * z + 0.5 * u(rng), 0.0, 1.0);
      pts.push_back({s, y, z});
    }
  }
  return pts;
}

TEST(EqualizedOdds, EqualizesGroupRates) {
  const auto pts = two_group_scores(15);
  const auto grid = default_threshold_grid();
  const auto policy = eo_postprocess(pts, 2, grid, 0.02);
  const auto [f0, t0] = eo_group_rates(policy, pts, 0);
  const auto [f1, t1] = eo_group_rates(policy, pts, 1);
  EXPECT_LE(std::abs(f0 - f1), 0.02);
  EXPECT_LE(std::abs(t0 - t1), 0.02);
  for (const auto& g : policy.groups) {
    EXPECT_NEAR(g.w_threshold + g.w_zero + g.w_one, 1.0, 1e-12);
    EXPECT_GE(g.w_zero, 0.0);
    EXPECT_GE(g.w_one, 0.0);
  }
}

TEST(EqualizedOdds, SingleGroupIsPlainThreshold) {
  auto pts = two_group_scores(16);
  std::erase_if(pts, [](const CalibrationPoint& p) { return p.subgroup != 0; });
  const auto policy = eo_postprocess(pts, 1, default_threshold_grid(), 0.02);
  ASSERT_EQ(policy.groups.size(), 1u);
  EXPECT_DOUBLE_EQ(policy.groups[0].w_threshold, 1.0);
  EXPECT_DOUBLE_EQ(policy.groups[0].w_zero, 0.0);
  EXPECT_DOUBLE_EQ(policy.groups[0].w_one, 0.0);
}

TEST(EqualizedOdds, AlreadyFairScorerIsUnchanged) {
  // Both groups share one score distribution per class.
  auto rng = make_rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CalibrationPoint> pts;
  for (int i = 0; i < 4000; ++i) {
    const int y = i % 2;
    const double s = std::clamp(0.3 * y + 0.35 + 0.3 * (u(rng) - 0.5), 0.0, 1.0);
    pts.push_back({s, y, (i / 2) % 2});
  }
  const auto policy = eo_postprocess(pts, 2, default_threshold_grid(), 0.02);
  double acc_before = 0.0, acc_after = 0.0;
  for (const auto& p : pts) {
    acc_before += ((p.score >= 0.5) == (p.label == 1));
    const double a = policy.acceptance(p.score, p.subgroup);
    acc_after += p.label == 1 ? a : 1.0 - a;
  }
  acc_before /= static_cast<double>(pts.size());
  acc_after /= static_cast<double>(pts.size());
  EXPECT_NEAR(acc_after, acc_before, 0.01);
  for (const auto& g : policy.groups) EXPECT_GE(g.w_threshold, 0.9);
}

TEST(EqualizedOdds, RejectsUnusableGroups) {
  std::vector<CalibrationPoint> pts{{0.2, 0, 0}, {0.8, 1, 0}, {0.5, 1, 1}};
  EXPECT_THROW(eo_postprocess(pts, 2, default_threshold_grid(), 0.02), ValidationError);
  std::vector<double> empty;
  EXPECT_THROW(eo_postprocess(pts, 2, empty, 0.02), ValidationError);
}

TEST(Persistence, RoundTripsEveryModelKind) {
  const auto dir = std::filesystem::temp_directory_path() / "mia_models_test";
  std::filesystem::create_directories(dir);
  MatrixXd x;
  VectorXi y;
  blobs(80, 3, 1.0, 18, x, y);
  TrainConfig cfg;
  cfg.l2_strength = 0.01;
  cfg.hidden_units = 4;
  cfg.epochs = 20;
  const std::vector<int> z(80, 0);
  std::vector<TrainedModel> models{train_logreg(x, y, 2, cfg), train_mlp(x, y, 2, cfg)};
  EOModel eo;
  eo.base = std::get<LinearModel>(models[0]);
  eo.policy.groups = {{0.4, 0.7, 0.2, 0.1}};
  models.push_back(eo);
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto path = (dir / ("m" + std::to_string(i) + ".json")).string();
    save_model(path, models[i], cfg);
    const auto [loaded, lcfg] = load_model(path);
    EXPECT_EQ(loaded.index(), models[i].index());
    EXPECT_EQ(lcfg.hidden_units, 4);
    EXPECT_EQ(predict_confidences(loaded, x, z), predict_confidences(models[i], x, z));
  }
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace mia
