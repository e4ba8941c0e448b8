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

#include "mia/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "mia/random.hpp"

namespace mia {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

// ---------------------------------------------------------------------------
// Scaling

FeatureScaler FeatureScaler::fit(ScalingKind kind, const MatrixXd& x, double max_row_norm) {
  FeatureScaler s;
  s.kind = kind;
  s.max_row_norm = max_row_norm;
  const auto d = x.cols();
  s.offset = VectorXd::Zero(d);
  s.scale = VectorXd::Ones(d);
  if (kind == ScalingKind::kIdentity || x.rows() == 0) return s;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (kind == ScalingKind::kStandard) {
      const double mean = x.col(j).mean();
      const double var = (x.col(j).array() - mean).square().mean();
      s.offset(j) = mean;
      s.scale(j) = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
    } else {
      const double lo = x.col(j).minCoeff();
      const double hi = x.col(j).maxCoeff();
      s.offset(j) = lo;
      s.scale(j) = hi - lo > 1e-24 ? 1.0 / (hi - lo) : 1.0;
    }
  }
  return s;
}

MatrixXd FeatureScaler::transform(const MatrixXd& x) const {
  if (kind == ScalingKind::kIdentity) return x;
  if (x.cols() != offset.size()) throw ValidationError("feature dimension mismatch in scaler");
  MatrixXd out = (x.rowwise() - offset.transpose()).array().rowwise() * scale.transpose().array();
  if (kind == ScalingKind::kMinMax) out = out.cwiseMax(0.0).cwiseMin(1.0);
  if (max_row_norm > 0.0) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double norm = out.row(i).norm();
      if (norm > max_row_norm) out.row(i) *= max_row_norm / norm;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Data helpers

MatrixXd design_matrix(const Population& pop, std::span<const std::size_t> indices) {
  const auto d = static_cast<Eigen::Index>(pop.feature_count());
  MatrixXd x(static_cast<Eigen::Index>(indices.size()), d);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& f = pop.examples[indices[i]].features;
    for (Eigen::Index j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), j) = f[j];
  }
  return x;
}

VectorXi label_vector(const Population& pop, std::span<const std::size_t> indices) {
  VectorXi y(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = pop.examples[indices[i]].label;
  }
  return y;
}

namespace {

int logit_rows(int num_classes) { return num_classes == 2 ? 1 : num_classes; }

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Cross-entropy of logits `z` (n x r) against labels; writes dL/dz (already
// divided by n) into `dz`.
double output_loss(const MatrixXd& z, const VectorXi& y, MatrixXd& dz) {
  const auto n = z.rows();
  dz.resize(n, z.cols());
  double loss = 0.0;
  if (z.cols() == 1) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double zi = z(i, 0);
      const double yi = y(i) == 1 ? 1.0 : 0.0;
      loss += softplus(zi) - yi * zi;
      dz(i, 0) = (sigmoid(zi) - yi) / static_cast<double>(n);
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mx = z.row(i).maxCoeff();
      double sum = 0.0;
      for (Eigen::Index c = 0; c < z.cols(); ++c) sum += std::exp(z(i, c) - mx);
      const double lse = mx + std::log(sum);
      loss += lse - z(i, y(i));
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        dz(i, c) = (std::exp(z(i, c) - lse) - (c == y(i) ? 1.0 : 0.0)) / static_cast<double>(n);
      }
    }
  }
  return n > 0 ? loss / static_cast<double>(n) : 0.0;
}

MatrixXd logits_to_probabilities(const MatrixXd& z, int num_classes) {
  MatrixXd p(z.rows(), num_classes);
  if (z.cols() == 1) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      p(i, 1) = sigmoid(z(i, 0));
      p(i, 0) = sigmoid(-z(i, 0));
    }
  } else {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double mx = z.row(i).maxCoeff();
      double sum = 0.0;
      for (Eigen::Index c = 0; c < z.cols(); ++c) sum += (p(i, c) = std::exp(z(i, c) - mx));
      p.row(i) /= sum;
    }
  }
  return p;
}

void check_training_data(const MatrixXd& x, const VectorXi& y, int num_classes) {
  if (x.rows() != y.size()) throw ValidationError("feature and label counts differ");
  if (num_classes < 2) throw ValidationError("need at least two classes");
  std::vector<int> seen(num_classes, 0);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) < 0 || y(i) >= num_classes) throw ValidationError("label out of range");
    seen[y(i)] = 1;
  }
  if (std::accumulate(seen.begin(), seen.end(), 0) < 2) {
    throw ValidationError("degenerate training data: fewer than two classes present");
  }
}

LinearModel fit_linear(const MatrixXd& xs, const VectorXi& y, int num_classes, const TrainConfig& cfg,
                       bool penalize_bias) {
  LinearModel m;
  m.num_classes = num_classes;
  const int r = logit_rows(num_classes);
  m.weights = MatrixXd::Zero(r, xs.cols());
  m.bias = VectorXd::Zero(r);
  double lr = cfg.learning_rate;
  LinearModel prev = m;
  double prev_loss = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto g = linear_loss_and_gradient(m, xs, y, cfg.l2_strength, penalize_bias);
    if (g.loss > prev_loss) {
      // Overshot: step back and retry with a smaller step.
      m = prev;
      lr *= 0.5;
      g = linear_loss_and_gradient(m, xs, y, cfg.l2_strength, penalize_bias);
    }
    prev = m;
    prev_loss = g.loss;
    m.weights -= lr * g.d_weights;
    m.bias -= lr * g.d_bias;
  }
  const auto last = linear_loss_and_gradient(m, xs, y, cfg.l2_strength, penalize_bias);
  if (last.loss > prev_loss) m = prev;
  return m;
}

}  // namespace

LinearGradient linear_loss_and_gradient(const LinearModel& model, const MatrixXd& x,
                                        const VectorXi& y, double l2, bool penalize_bias) {
  MatrixXd z = x * model.weights.transpose();
  z.rowwise() += model.bias.transpose();
  MatrixXd dz;
  LinearGradient g;
  g.loss = output_loss(z, y, dz);
  g.d_weights = dz.transpose() * x + l2 * model.weights;
  g.d_bias = dz.colwise().sum().transpose();
  g.loss += 0.5 * l2 * model.weights.squaredNorm();
  if (penalize_bias) {
    g.d_bias += l2 * model.bias;
    g.loss += 0.5 * l2 * model.bias.squaredNorm();
  }
  return g;
}

MLPGradient mlp_loss_and_gradient(const MLPModel& model, const MatrixXd& x, const VectorXi& y,
                                  double l2) {
  MatrixXd pre = x * model.hidden_weights.transpose();
  pre.rowwise() += model.hidden_bias.transpose();
  const MatrixXd h = pre.cwiseMax(0.0);
  MatrixXd z = h * model.output_weights.transpose();
  z.rowwise() += model.output_bias.transpose();
  MatrixXd dz;
  MLPGradient g;
  g.loss = output_loss(z, y, dz);
  g.loss += 0.5 * l2 * (model.hidden_weights.squaredNorm() + model.output_weights.squaredNorm());
  g.d_output_weights = dz.transpose() * h + l2 * model.output_weights;
  g.d_output_bias = dz.colwise().sum().transpose();
  MatrixXd dh = dz * model.output_weights;
  dh = dh.array() * (pre.array() > 0.0).cast<double>();
  g.d_hidden_weights = dh.transpose() * x + l2 * model.hidden_weights;
  g.d_hidden_bias = dh.colwise().sum().transpose();
  return g;
}

LinearModel train_logreg(const MatrixXd& x, const VectorXi& y, int num_classes,
                         const TrainConfig& cfg) {
  check_training_data(x, y, num_classes);
  const auto scaler = FeatureScaler::fit(cfg.scaling, x);
  auto m = fit_linear(scaler.transform(x), y, num_classes, cfg, false);
  m.scaler = scaler;
  return m;
}

namespace {

struct AdamState {
  MatrixXd m, v;
  explicit AdamState(const MatrixXd& shape)
      : m(MatrixXd::Zero(shape.rows(), shape.cols())), v(MatrixXd::Zero(shape.rows(), shape.cols())) {}
  void step(MatrixXd& param, const MatrixXd& grad, double lr, int t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1 - b1) * grad;
    v = b2 * v + (1 - b2) * grad.cwiseProduct(grad);
    const double lr_t = lr * std::sqrt(1 - std::pow(b2, t)) / (1 - std::pow(b1, t));
    param.array() -= lr_t * m.array() / (v.array().sqrt() + eps);
  }
};

}  // namespace

MLPModel train_mlp(const MatrixXd& x, const VectorXi& y, int num_classes, const TrainConfig& cfg) {
  check_training_data(x, y, num_classes);
  if (cfg.hidden_units < 1) throw ValidationError("MLP needs at least one hidden unit");
  MLPModel m;
  m.num_classes = num_classes;
  m.scaler = FeatureScaler::fit(cfg.scaling, x);
  const MatrixXd xs = m.scaler.transform(x);
  const auto d = xs.cols();
  const int h = cfg.hidden_units;
  const int r = logit_rows(num_classes);

  auto rng = make_rng(cfg.seed, {0x6d6c70});
  auto glorot = [&](Eigen::Index rows, Eigen::Index cols) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-bound, bound);
    MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = u(rng);
    return w;
  };
  m.hidden_weights = glorot(h, d);
  m.hidden_bias = glorot(h, 1).col(0);
  m.output_weights = glorot(r, h);
  m.output_bias = glorot(r, 1).col(0);

  const auto n = xs.rows();
  if (cfg.optimizer == OptimizerKind::kGradientDescent) {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const auto g = mlp_loss_and_gradient(m, xs, y, cfg.l2_strength);
      m.hidden_weights -= cfg.learning_rate * g.d_hidden_weights;
      m.hidden_bias -= cfg.learning_rate * g.d_hidden_bias;
      m.output_weights -= cfg.learning_rate * g.d_output_weights;
      m.output_bias -= cfg.learning_rate * g.d_output_bias;
    }
    return m;
  }

  AdamState s_hw(m.hidden_weights), s_ow(m.output_weights);
  MatrixXd hb = m.hidden_bias, ob = m.output_bias;
  AdamState s_hb(hb), s_ob(ob);
  const Eigen::Index batch = cfg.batch_size > 0 ? std::min<Eigen::Index>(cfg.batch_size, n) : n;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  auto shuffle_rng = make_rng(cfg.seed, {0x736875});
  int t = 0;
  MatrixXd xb;
  VectorXi yb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index len = std::min(batch, n - start);
      xb.resize(len, d);
      yb.resize(len);
      for (Eigen::Index i = 0; i < len; ++i) {
        xb.row(i) = xs.row(order[static_cast<std::size_t>(start + i)]);
        yb(i) = y(order[static_cast<std::size_t>(start + i)]);
      }
      m.hidden_bias = hb.col(0);
      m.output_bias = ob.col(0);
      const auto g = mlp_loss_and_gradient(m, xb, yb, cfg.l2_strength);
      ++t;
      s_hw.step(m.hidden_weights, g.d_hidden_weights, cfg.learning_rate, t);
      s_ow.step(m.output_weights, g.d_output_weights, cfg.learning_rate, t);
      s_hb.step(hb, g.d_hidden_bias, cfg.learning_rate, t);
      s_ob.step(ob, g.d_output_bias, cfg.learning_rate, t);
    }
  }
  m.hidden_bias = hb.col(0);
  m.output_bias = ob.col(0);
  return m;
}

double dp_noise_scale(std::size_t n, std::size_t d, int num_classes, double l2, double epsilon) {
  const double lipschitz = num_classes == 2 ? 1.0 : std::sqrt(2.0);
  const double radius = std::sqrt(static_cast<double>(d) + 1.0);  // features plus the bias input
  return 2.0 * lipschitz * radius / (static_cast<double>(n) * l2 * epsilon);
}

LinearModel train_dp_logreg(const MatrixXd& x, const VectorXi& y, int num_classes,
                            const TrainConfig& cfg) {
  if (!cfg.dp_epsilon || *cfg.dp_epsilon <= 0.0) {
    throw ValidationError("differentially private training needs epsilon > 0");
  }
  if (cfg.l2_strength <= 0.0) {
    throw ValidationError("differentially private training needs l2_strength > 0 (bounded sensitivity)");
  }
  check_training_data(x, y, num_classes);
  const double d = static_cast<double>(x.cols());
  const auto scaler = FeatureScaler::fit(ScalingKind::kMinMax, x, std::sqrt(d));
  auto m = fit_linear(scaler.transform(x), y, num_classes, cfg, true);
  m.scaler = scaler;

  const double beta = dp_noise_scale(static_cast<std::size_t>(x.rows()), x.cols(), num_classes,
                                     cfg.l2_strength, *cfg.dp_epsilon);
  const auto dims = m.weights.size() + m.bias.size();
  auto rng = make_rng(cfg.seed, {0x6470});
  std::normal_distribution<double> normal;
  VectorXd direction(dims);
  for (Eigen::Index i = 0; i < dims; ++i) direction(i) = normal(rng);
  direction.normalize();
  std::gamma_distribution<double> radius(static_cast<double>(dims), beta);
  const VectorXd noise = radius(rng) * direction;
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m.weights.rows(); ++i)
    for (Eigen::Index j = 0; j < m.weights.cols(); ++j) m.weights(i, j) += noise(k++);
  for (Eigen::Index i = 0; i < m.bias.size(); ++i) m.bias(i) += noise(k++);
  return m;
}

// ---------------------------------------------------------------------------
// Equalized odds

double EOPolicy::acceptance(double score, int subgroup) const {
  if (subgroup < 0 || static_cast<std::size_t>(subgroup) >= groups.size()) {
    throw ValidationError("subgroup " + std::to_string(subgroup) + " has no EO policy");
  }
  const auto& g = groups[subgroup];
  return std::clamp(g.w_threshold * (score >= g.threshold ? 1.0 : 0.0) + g.w_one, 0.0, 1.0);
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  return grid;
}

std::pair<double, double> eo_group_rates(const EOPolicy& policy,
                                         std::span<const CalibrationPoint> points, int subgroup) {
  double pos = 0, neg = 0, tp = 0, fp = 0;
  for (const auto& pt : points) {
    if (pt.subgroup != subgroup) continue;
    const double a = policy.acceptance(pt.score, subgroup);
    if (pt.label == 1) {
      ++pos;
      tp += a;
    } else {
      ++neg;
      fp += a;
    }
  }
  return {neg > 0 ? fp / neg : 0.0, pos > 0 ? tp / pos : 0.0};
}

namespace {

struct RocVertex {
  double threshold;
  double fpr;
  double tpr;
};

// Writes mixing weights reaching (pf, pt) from vertex v; false if infeasible.
bool mix_to(const RocVertex& v, double pf, double pt, EOGroupPolicy& out) {
  constexpr double eps = 1e-12;
  double a, c;
  if (std::abs(v.tpr - v.fpr) < eps) {
    if (std::abs(pt - pf) > eps) return false;
    a = 0.0;
    c = pf;
  } else {
    a = (pt - pf) / (v.tpr - v.fpr);
    c = pf - a * v.fpr;
  }
  const double b = 1.0 - a - c;
  if (a < -eps || c < -eps || b < -eps || a > 1 + eps) return false;
  out = {v.threshold, std::clamp(a, 0.0, 1.0), std::clamp(b, 0.0, 1.0), std::clamp(c, 0.0, 1.0)};
  return true;
}

}  // namespace

EOPolicy eo_postprocess(std::span<const CalibrationPoint> points, int num_subgroups,
                        std::span<const double> threshold_grid, double tol) {
  if (threshold_grid.empty()) throw ValidationError("threshold grid is empty");
  std::vector<double> pos(num_subgroups, 0), neg(num_subgroups, 0);
  for (const auto& pt : points) {
    if (pt.label != 0 && pt.label != 1) throw ValidationError("EO post-processing needs binary labels");
    if (pt.subgroup < 0 || pt.subgroup >= num_subgroups) {
      throw ValidationError("calibration subgroup out of range");
    }
    (pt.label == 1 ? pos : neg)[pt.subgroup] += 1;
  }
  for (int z = 0; z < num_subgroups; ++z) {
    if (pos[z] == 0 || neg[z] == 0) {
      throw ValidationError("subgroup " + std::to_string(z) +
                            " lacks positives or negatives for EO post-processing");
    }
  }
  std::vector<std::vector<RocVertex>> roc(num_subgroups);
  for (int z = 0; z < num_subgroups; ++z) {
    for (double t : threshold_grid) {
      double tp = 0, fp = 0;
      for (const auto& pt : points) {
        if (pt.subgroup != z || pt.score < t) continue;
        (pt.label == 1 ? tp : fp) += 1;
      }
      roc[z].push_back({t, fp / neg[z], tp / pos[z]});
    }
  }
  const double n_pos = std::accumulate(pos.begin(), pos.end(), 0.0);
  const double n_all = n_pos + std::accumulate(neg.begin(), neg.end(), 0.0);
  const double p_pos = n_pos / n_all;

  std::vector<std::pair<double, double>> candidates;
  for (const auto& curve : roc)
    for (const auto& v : curve) candidates.emplace_back(v.fpr, v.tpr);
  for (int i = 0; i <= 100; ++i)
    for (int j = 0; j <= 100; ++j) candidates.emplace_back(i / 100.0, j / 100.0);

  double best_err = std::numeric_limits<double>::infinity();
  std::vector<EOGroupPolicy> best;
  std::pair<double, double> best_point{0, 0};
  std::vector<EOGroupPolicy> trial(num_subgroups);
  for (const auto& [pf, pt] : candidates) {
    const double err = p_pos * (1.0 - pt) + (1.0 - p_pos) * pf;
    if (err >= best_err) continue;
    bool ok = true;
    for (int z = 0; z < num_subgroups && ok; ++z) {
      bool found = false;
      EOGroupPolicy choice, cand;
      for (const auto& v : roc[z]) {
        if (mix_to(v, pf, pt, cand) && (!found || cand.w_threshold > choice.w_threshold)) {
          choice = cand;
          found = true;
        }
      }
      ok = found;
      trial[z] = choice;
    }
    if (!ok) continue;
    best_err = err;
    best = trial;
    best_point = {pf, pt};
  }
  EOPolicy policy{best, best_point.first, best_point.second};
  double worst = 0.0;
  for (int z = 0; z < num_subgroups; ++z) {
    const auto [f, t] = eo_group_rates(policy, points, z);
    worst = std::max({worst, std::abs(f - policy.target_fpr), std::abs(t - policy.target_tpr)});
  }
  if (worst > tol) {
    throw ValidationError("EO post-processing infeasible within tolerance; best achievable gap " +
                          std::to_string(worst));
  }
  return policy;
}

// ---------------------------------------------------------------------------
// Prediction

namespace {

MatrixXd linear_probabilities(const LinearModel& m, const MatrixXd& x) {
  MatrixXd z = m.scaler.transform(x) * m.weights.transpose();
  z.rowwise() += m.bias.transpose();
  return logits_to_probabilities(z, m.num_classes);
}

MatrixXd mlp_probabilities(const MLPModel& m, const MatrixXd& x) {
  MatrixXd pre = m.scaler.transform(x) * m.hidden_weights.transpose();
  pre.rowwise() += m.hidden_bias.transpose();
  MatrixXd z = pre.cwiseMax(0.0) * m.output_weights.transpose();
  z.rowwise() += m.output_bias.transpose();
  return logits_to_probabilities(z, m.num_classes);
}

}  // namespace

int model_feature_count(const TrainedModel& model) {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) return static_cast<int>(m.weights.cols());
        if constexpr (std::is_same_v<T, MLPModel>) return static_cast<int>(m.hidden_weights.cols());
        if constexpr (std::is_same_v<T, EOModel>) return static_cast<int>(m.base.weights.cols());
      },
      model);
}

MatrixXd predict_confidences(const TrainedModel& model, const MatrixXd& x,
                             std::span<const int> subgroups) {
  if (x.cols() != model_feature_count(model)) {
    throw ValidationError("feature dimension mismatch: model expects " +
                          std::to_string(model_feature_count(model)) + ", got " +
                          std::to_string(x.cols()));
  }
  return std::visit(
      [&](const auto& m) -> MatrixXd {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) return linear_probabilities(m, x);
        if constexpr (std::is_same_v<T, MLPModel>) return mlp_probabilities(m, x);
        if constexpr (std::is_same_v<T, EOModel>) {
          if (static_cast<Eigen::Index>(subgroups.size()) != x.rows()) {
            throw ValidationError("EO model needs one subgroup per row");
          }
          const MatrixXd base = linear_probabilities(m.base, x);
          MatrixXd out(x.rows(), 2);
          for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double a = m.policy.acceptance(base(i, 1), subgroups[static_cast<std::size_t>(i)]);
            out(i, 0) = 1.0 - a;
            out(i, 1) = a;
          }
          return out;
        }
      },
      model);
}

std::vector<double> predict_confidence(const TrainedModel& model, std::span<const double> features,
                                       int subgroup) {
  MatrixXd x(1, static_cast<Eigen::Index>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) x(0, static_cast<Eigen::Index>(j)) = features[j];
  const int groups[1] = {subgroup};
  const MatrixXd p = predict_confidences(model, x, groups);
  return std::vector<double>(p.data(), p.data() + p.size());
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

using nlohmann::json;

json matrix_to_json(const MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw DataError("matrix payload does not match its shape");
  }
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[static_cast<std::size_t>(i * cols + j2)];
  return m;
}

json scaler_to_json(const FeatureScaler& s) {
  return {{"kind", static_cast<int>(s.kind)},
          {"offset", matrix_to_json(s.offset)},
          {"scale", matrix_to_json(s.scale)},
          {"max_row_norm", s.max_row_norm}};
}

FeatureScaler scaler_from_json(const json& j) {
  FeatureScaler s;
  s.kind = static_cast<ScalingKind>(j.at("kind").get<int>());
  s.offset = matrix_from_json(j.at("offset")).col(0);
  s.scale = matrix_from_json(j.at("scale")).col(0);
  s.max_row_norm = j.at("max_row_norm").get<double>();
  return s;
}

json linear_to_json(const LinearModel& m) {
  return {{"weights", matrix_to_json(m.weights)},
          {"bias", matrix_to_json(m.bias)},
          {"num_classes", m.num_classes},
          {"scaler", scaler_to_json(m.scaler)}};
}

LinearModel linear_from_json(const json& j) {
  LinearModel m;
  m.weights = matrix_from_json(j.at("weights"));
  m.bias = matrix_from_json(j.at("bias")).col(0);
  m.num_classes = j.at("num_classes").get<int>();
  m.scaler = scaler_from_json(j.at("scaler"));
  return m;
}

}  // namespace

void save_model(const std::string& path, const TrainedModel& model, const TrainConfig& cfg) {
  json j;
  j["config"] = {{"l2_strength", cfg.l2_strength},
                 {"epochs", cfg.epochs},
                 {"learning_rate", cfg.learning_rate},
                 {"seed", cfg.seed},
                 {"hidden_units", cfg.hidden_units},
                 {"dp_epsilon", cfg.dp_epsilon ? json(*cfg.dp_epsilon) : json(nullptr)},
                 {"optimizer", static_cast<int>(cfg.optimizer)},
                 {"batch_size", cfg.batch_size},
                 {"scaling", static_cast<int>(cfg.scaling)}};
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          j["type"] = "linear";
          j["model"] = linear_to_json(m);
        } else if constexpr (std::is_same_v<T, MLPModel>) {
          j["type"] = "mlp";
          j["model"] = {{"hidden_weights", matrix_to_json(m.hidden_weights)},
                        {"hidden_bias", matrix_to_json(m.hidden_bias)},
                        {"output_weights", matrix_to_json(m.output_weights)},
                        {"output_bias", matrix_to_json(m.output_bias)},
                        {"num_classes", m.num_classes},
                        {"scaler", scaler_to_json(m.scaler)}};
        } else {
          j["type"] = "eo";
          json groups = json::array();
          for (const auto& g : m.policy.groups) {
            groups.push_back({{"threshold", g.threshold},
                              {"w_threshold", g.w_threshold},
                              {"w_zero", g.w_zero},
                              {"w_one", g.w_one}});
          }
          j["model"] = {{"base", linear_to_json(m.base)},
                        {"groups", groups},
                        {"target_fpr", m.policy.target_fpr},
                        {"target_tpr", m.policy.target_tpr}};
        }
      },
      model);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file " + path);
  out << j.dump(1) << '\n';
}

std::pair<TrainedModel, TrainConfig> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read model file " + path);
  json j;
  try {
    in >> j;
    TrainConfig cfg;
    const auto& c = j.at("config");
    cfg.l2_strength = c.at("l2_strength").get<double>();
    cfg.epochs = c.at("epochs").get<int>();
    cfg.learning_rate = c.at("learning_rate").get<double>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.hidden_units = c.at("hidden_units").get<int>();
    if (!c.at("dp_epsilon").is_null()) cfg.dp_epsilon = c.at("dp_epsilon").get<double>();
    cfg.optimizer = static_cast<OptimizerKind>(c.at("optimizer").get<int>());
    cfg.batch_size = c.at("batch_size").get<int>();
    cfg.scaling = static_cast<ScalingKind>(c.at("scaling").get<int>());
    const auto type = j.at("type").get<std::string>();
    const auto& m = j.at("model");
    if (type == "linear") return {linear_from_json(m), cfg};
    if (type == "mlp") {
      MLPModel mlp;
      mlp.hidden_weights = matrix_from_json(m.at("hidden_weights"));
      mlp.hidden_bias = matrix_from_json(m.at("hidden_bias")).col(0);
      mlp.output_weights = matrix_from_json(m.at("output_weights"));
      mlp.output_bias = matrix_from_json(m.at("output_bias")).col(0);
      mlp.num_classes = m.at("num_classes").get<int>();
      mlp.scaler = scaler_from_json(m.at("scaler"));
      return {mlp, cfg};
    }
    if (type == "eo") {
      EOModel eo;
      eo.base = linear_from_json(m.at("base"));
      for (const auto& g : m.at("groups")) {
        eo.policy.groups.push_back({g.at("threshold").get<double>(), g.at("w_threshold").get<double>(),
                                    g.at("w_zero").get<double>(), g.at("w_one").get<double>()});
      }
      eo.policy.target_fpr = m.at("target_fpr").get<double>();
      eo.policy.target_tpr = m.at("target_tpr").get<double>();
      return {eo, cfg};
    }
    throw DataError("unknown model type " + type);
  } catch (const json::exception& e) {
    throw DataError("malformed model file " + path + ": " + e.what());
  }
}

}  // namespace mia
