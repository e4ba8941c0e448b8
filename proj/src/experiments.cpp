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

#include "mia/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "mia/random.hpp"

namespace mia {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kSplitTag = 0x73706c;
constexpr std::uint64_t kModelTag = 0x6d6f64;
constexpr std::uint64_t kEvalTag = 0x657661;
constexpr std::uint64_t kPermTag = 0x706572;

// Penalty for the private model, lambda = kDpL2PerExample / n.
constexpr double kDpL2PerExample = 100.0;

}  // namespace

// ---------------------------------------------------------------------------
// Recipes

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names = {"logreg", "mlp6",      "mlp100",
                                                 "mlp500", "dp-logreg", "eo-logreg"};
  return names;
}

ModelRecipe make_recipe(const std::string& name, std::optional<double> epsilon) {
  if (epsilon && name != "dp-logreg") throw ValidationError("epsilon only applies to dp-logreg");
  ModelRecipe r;
  r.name = name;
  auto& c = r.config;
  if (name == "logreg" || name == "eo-logreg") {
    // C = 0.01 in the inverse-strength convention.
    r.l2_per_example = 100.0;
    c.epochs = 500;
    c.learning_rate = 0.5;
    r.equalized_odds = name == "eo-logreg";
  } else if (name == "mlp6" || name == "mlp100" || name == "mlp500") {
    c.hidden_units = std::stoi(name.substr(3));
    c.optimizer = OptimizerKind::kAdam;
    c.batch_size = 200;
    c.learning_rate = 1e-3;
    c.epochs = 200;
    // Penalty alpha applied per minibatch of 200: alpha = 0.01 for the small
    // network, 1e-4 for the over-parametrized ones.
    c.l2_strength = (c.hidden_units == 6 ? 0.01 : 1e-4) / 200.0;
  } else if (name == "dp-logreg") {
    if (!epsilon) throw ValidationError("dp-logreg needs --epsilon");
    if (*epsilon <= 0.0) throw ValidationError("epsilon must be positive");
    c.dp_epsilon = epsilon;
    c.scaling = ScalingKind::kMinMax;
    c.epochs = 500;
    c.learning_rate = 0.5;
    r.l2_per_example = kDpL2PerExample;
  } else {
    throw ValidationError("unknown model recipe '" + name + "'");
  }
  return r;
}

TrainedModel train_recipe(const ModelRecipe& recipe, const Eigen::MatrixXd& x,
                          const Eigen::VectorXi& y, std::span<const int> z, int num_classes,
                          int num_subgroups, std::uint64_t seed) {
  if (recipe.trainer) return recipe.trainer(x, y, z, num_classes, num_subgroups, seed);
  TrainConfig cfg = recipe.config;
  cfg.seed = seed;
  if (recipe.l2_per_example > 0.0) {
    cfg.l2_strength = recipe.l2_per_example / static_cast<double>(std::max<Eigen::Index>(1, x.rows()));
  }
  if (cfg.dp_epsilon) return train_dp_logreg(x, y, num_classes, cfg);
  if (cfg.hidden_units > 0) return train_mlp(x, y, num_classes, cfg);
  auto base = train_logreg(x, y, num_classes, cfg);
  if (!recipe.equalized_odds) return base;
  if (num_classes != 2) throw ValidationError("equalized-odds post-processing needs a binary task");
  const auto groups = std::vector<int>(z.begin(), z.end());
  const Eigen::MatrixXd p = predict_confidences(TrainedModel(base), x, groups);
  std::vector<CalibrationPoint> points;
  points.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    points.push_back({p(i, 1), y(i), groups[static_cast<std::size_t>(i)]});
  }
  const auto grid = default_threshold_grid();
  return EOModel{std::move(base), eo_postprocess(points, num_subgroups, grid)};
}

double model_accuracy(const TrainedModel& model, const Eigen::MatrixXd& x,
                      const Eigen::VectorXi& y, std::span<const int> z) {
  if (x.rows() == 0) return 0.0;
  const Eigen::MatrixXd p = predict_confidences(model, x, z);
  const bool randomized = std::holds_alternative<EOModel>(model);
  double hits = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (randomized) {
      hits += p(i, y(i));
    } else {
      Eigen::Index best = 0;
      p.row(i).maxCoeff(&best);
      hits += best == y(i) ? 1.0 : 0.0;
    }
  }
  return hits / static_cast<double>(p.rows());
}

// ---------------------------------------------------------------------------
// Shuffle studies

Split stratified_split(const Population& pop, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train fraction must lie in (0, 1)");
  }
  const int p = pop.num_classes, k = pop.num_subgroups;
  std::vector<std::vector<std::size_t>> cells(static_cast<std::size_t>(p) * k);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto& ex = pop.examples[i];
    cells[static_cast<std::size_t>(ex.label) * k + ex.subgroup].push_back(i);
  }
  Split s;
  for (int y = 0; y < p; ++y) {
    for (int z = 0; z < k; ++z) {
      auto& cell = cells[static_cast<std::size_t>(y) * k + z];
      auto rng = make_rng(seed, {kSplitTag, static_cast<std::uint64_t>(y), static_cast<std::uint64_t>(z)});
      std::shuffle(cell.begin(), cell.end(), rng);
      const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(cell.size())));
      s.train.insert(s.train.end(), cell.begin(), cell.begin() + static_cast<std::ptrdiff_t>(n_train));
      s.test.insert(s.test.end(), cell.begin() + static_cast<std::ptrdiff_t>(n_train), cell.end());
    }
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.count = static_cast<int>(values.size());
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

namespace {

std::vector<int> subgroups_of(const Population& pop, std::span<const std::size_t> idx) {
  std::vector<int> z;
  z.reserve(idx.size());
  for (auto i : idx) z.push_back(pop.examples[i].subgroup);
  return z;
}

std::vector<ScoredExample> score(const Population& pop, std::span<const std::size_t> idx,
                                 const Eigen::MatrixXd& conf) {
  std::vector<ScoredExample> out;
  out.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& ex = pop.examples[idx[i]];
    const auto row = conf.row(static_cast<Eigen::Index>(i));
    out.push_back({ex.id, ex.label, ex.subgroup, {}});
    auto& c = out.back().confidence;
    c.resize(static_cast<std::size_t>(conf.cols()));
    for (Eigen::Index j = 0; j < conf.cols(); ++j) c[static_cast<std::size_t>(j)] = row(j);
  }
  return out;
}

}  // namespace

ShuffleResult audit_split(const Population& pop, const Split& split, const TrainedModel& model,
                          int bins, std::uint64_t seed) {
  const auto x_train = design_matrix(pop, split.train);
  const auto x_test = design_matrix(pop, split.test);
  const auto y_train = label_vector(pop, split.train);
  const auto y_test = label_vector(pop, split.test);
  const auto z_train = subgroups_of(pop, split.train);
  const auto z_test = subgroups_of(pop, split.test);
  const auto conf_train = predict_confidences(model, x_train, z_train);
  const auto conf_test = predict_confidences(model, x_test, z_test);
  const auto members = score(pop, split.train, conf_train);
  const auto nonmembers = score(pop, split.test, conf_test);
  auto build = build_evaluation_set(members, nonmembers, pop.num_classes, pop.num_subgroups, bins,
                                    derive_seed(seed, {kEvalTag}));
  const auto table = estimate_tables(build.set);
  auto cmp = compare_adversaries(table, build.set);
  ShuffleResult r{
      .index = 0,
      .seed = seed,
      .train_accuracy = model_accuracy(model, x_train, y_train, z_train),
      .test_accuracy = model_accuracy(model, x_test, y_test, z_test),
      .overfitting = 0.0,
      .report = {std::move(cmp.regular), std::move(cmp.discriminating)},
      .profile = compute_profile(table),
      .set = std::move(build.set),
      .dropped_cells = std::move(build.dropped_cells),
  };
  r.overfitting = r.train_accuracy - r.test_accuracy;
  return r;
}

StudyAggregate aggregate_shuffles(const std::vector<ShuffleResult>& shuffles, int num_subgroups) {
  auto collect = [&](auto get) {
    std::vector<double> v;
    for (const auto& s : shuffles) v.push_back(get(s));
    return mean_std(v);
  };
  StudyAggregate a;
  a.train_accuracy = collect([](const ShuffleResult& s) { return s.train_accuracy; });
  a.test_accuracy = collect([](const ShuffleResult& s) { return s.test_accuracy; });
  a.overfitting = collect([](const ShuffleResult& s) { return s.overfitting; });
  a.regular = collect([](const ShuffleResult& s) { return s.report.regular.vulnerability; });
  a.discriminating = collect([](const ShuffleResult& s) { return s.report.discriminating.vulnerability; });
  a.regular_max_disparity = collect([](const ShuffleResult& s) { return s.report.regular.max_disparity; });
  a.discriminating_max_disparity =
      collect([](const ShuffleResult& s) { return s.report.discriminating.max_disparity; });
  for (int z = 0; z < num_subgroups; ++z) {
    std::vector<double> reg, disc;
    for (const auto& s : shuffles) {
      if (const auto& v = s.report.regular.by_subgroup[z]) reg.push_back(*v);
      if (const auto& v = s.report.discriminating.by_subgroup[z]) disc.push_back(*v);
    }
    a.regular_by_subgroup.push_back(mean_std(reg));
    a.discriminating_by_subgroup.push_back(mean_std(disc));
  }
  return a;
}

ShuffleStudy run_shuffle_study(const Population& pop, const ModelRecipe& recipe,
                               const StudyOptions& options, const std::string& dataset) {
  if (options.n_shuffles < 1) throw ValidationError("need at least one shuffle");
  if (options.bins < 2) throw ValidationError("need at least two bins");
  pop.validate();
  // Needs at least one subgroup that holds every class.
  int complete = 0;
  for (int z = 0; z < pop.num_subgroups; ++z) {
    std::vector<int> seen(pop.num_classes, 0);
    for (const auto& ex : pop.examples)
      if (ex.subgroup == z) seen[ex.label] = 1;
    complete += std::accumulate(seen.begin(), seen.end(), 0) == pop.num_classes ? 1 : 0;
  }
  if (complete < 1) {
    throw ValidationError("study needs a subgroup with every class present");
  }

  ShuffleStudy study;
  study.dataset = dataset;
  study.recipe = recipe.name;
  study.options = options;
  study.subgroup_names = pop.subgroup_names;
  for (int i = 0; i < options.n_shuffles; ++i) {
    const std::uint64_t seed = options.base_seed + static_cast<std::uint64_t>(i);
    try {
      const auto split = stratified_split(pop, options.train_fraction, derive_seed(seed, {kSplitTag}));
      const auto x = design_matrix(pop, split.train);
      const auto y = label_vector(pop, split.train);
      const auto z = subgroups_of(pop, split.train);
      const auto model = train_recipe(recipe, x, y, z, pop.num_classes, pop.num_subgroups,
                                      derive_seed(seed, {kModelTag}));
      auto result = audit_split(pop, split, model, options.bins, seed);
      result.index = i;
      study.shuffles.push_back(std::move(result));
    } catch (const ValidationError& e) {
      throw ValidationError("shuffle " + std::to_string(i) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("shuffle " + std::to_string(i) + ": " + e.what());
    }
  }
  study.aggregate = aggregate_shuffles(study.shuffles, pop.num_subgroups);
  return study;
}

// ---------------------------------------------------------------------------
// Permutation test

namespace {

// Compact view of one evaluation set for fast refitting.
struct PackedSet {
  int p = 0, k = 0, bins = 0;
  std::vector<int> label, member, bin, subgroup;
  std::vector<std::uint8_t> regular_correct;
  std::vector<std::vector<std::size_t>> strata;  // [y * 2 + m] -> record indices
  std::vector<std::int64_t> subgroup_total;
  std::vector<std::int64_t> cell_total;  // [m][y][z]
};

PackedSet pack(const EvaluationSet& set) {
  PackedSet s;
  s.p = set.num_classes();
  s.k = set.num_subgroups();
  s.bins = set.bins();
  s.strata.resize(static_cast<std::size_t>(s.p) * 2);
  s.subgroup_total.assign(s.k, 0);
  s.cell_total.assign(static_cast<std::size_t>(2) * s.p * s.k, 0);
  const auto& recs = set.records();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    s.label.push_back(r.label);
    s.member.push_back(r.member);
    s.bin.push_back(r.bin);
    s.subgroup.push_back(r.subgroup);
    s.strata[static_cast<std::size_t>(r.label) * 2 + r.member].push_back(i);
    ++s.subgroup_total[r.subgroup];
    ++s.cell_total[(static_cast<std::size_t>(r.member) * s.p + r.label) * s.k + r.subgroup];
  }
  const auto regular = evaluate_vulnerability(fit_regular_adversary(estimate_tables(set)), set);
  s.regular_correct = regular.correct;
  return s;
}

// Per-subgroup vulnerability under subgroup assignment `z`; NaN when empty.
std::vector<double> subgroup_vulnerability(const PackedSet& s, const std::vector<int>& z,
                                           AdversaryKind kind, std::vector<std::int64_t>& scratch) {
  std::vector<double> hits(s.k, 0.0);
  if (kind == AdversaryKind::kRegular) {
    for (std::size_t i = 0; i < z.size(); ++i) hits[z[i]] += s.regular_correct[i];
  } else {
    const std::size_t cells = static_cast<std::size_t>(s.p) * s.k * s.bins;
    scratch.assign(2 * cells, 0);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const std::size_t c = (static_cast<std::size_t>(s.label[i]) * s.k + z[i]) * s.bins + s.bin[i];
      ++scratch[static_cast<std::size_t>(s.member[i]) * cells + c];
    }
    for (int y = 0; y < s.p; ++y) {
      for (int g = 0; g < s.k; ++g) {
        const auto t1 = s.cell_total[(static_cast<std::size_t>(1) * s.p + y) * s.k + g];
        const auto t0 = s.cell_total[(static_cast<std::size_t>(0) * s.p + y) * s.k + g];
        for (int b = 0; b < s.bins; ++b) {
          const std::size_t c = (static_cast<std::size_t>(y) * s.k + g) * s.bins + b;
          const auto n1 = scratch[cells + c], n0 = scratch[c];
          const bool in = t1 > 0 && t0 > 0 &&
                          static_cast<__int128>(n1) * t0 > static_cast<__int128>(n0) * t1;
          hits[g] += static_cast<double>(in ? n1 : n0);
        }
      }
    }
  }
  std::vector<double> v(s.k, std::nan(""));
  for (int g = 0; g < s.k; ++g) {
    if (s.subgroup_total[g] > 0) v[g] = hits[g] / static_cast<double>(s.subgroup_total[g]);
  }
  return v;
}

double statistic(const std::vector<std::vector<double>>& per_set, const DisparityStatistic& stat) {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : per_set) {
    if (stat.subgroup) {
      const double a = v[*stat.subgroup], b = v[*stat.other_subgroup];
      if (std::isnan(a) || std::isnan(b)) continue;
      sum += a - b;
      ++n;
    } else {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      int defined = 0;
      for (double x : v) {
        if (std::isnan(x)) continue;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        ++defined;
      }
      sum += defined >= 2 ? hi - lo : 0.0;
      ++n;
    }
  }
  if (n == 0) return 0.0;
  return stat.subgroup ? std::abs(sum / n) : sum / n;
}

void check_statistic(std::span<const EvaluationSet> sets, const DisparityStatistic& stat) {
  if (sets.empty()) throw ValidationError("no evaluation sets to test");
  if (stat.subgroup.has_value() != stat.other_subgroup.has_value()) {
    throw ValidationError("a pair statistic needs both subgroups");
  }
  if (stat.subgroup) {
    const int k = sets.front().num_subgroups();
    if (*stat.subgroup < 0 || *stat.subgroup >= k || *stat.other_subgroup < 0 ||
        *stat.other_subgroup >= k || *stat.subgroup == *stat.other_subgroup) {
      throw ValidationError("invalid subgroup pair");
    }
  }
}

}  // namespace

double disparity_statistic(std::span<const EvaluationSet> sets, AdversaryKind kind,
                           const DisparityStatistic& stat) {
  check_statistic(sets, stat);
  std::vector<std::vector<double>> per_set;
  std::vector<std::int64_t> scratch;
  for (const auto& set : sets) {
    const auto s = pack(set);
    per_set.push_back(subgroup_vulnerability(s, s.subgroup, kind, scratch));
  }
  return statistic(per_set, stat);
}

PermutationResult permutation_disparity_test(std::span<const EvaluationSet> sets,
                                             AdversaryKind kind, const DisparityStatistic& stat,
                                             int n_permutations, std::uint64_t seed) {
  if (n_permutations < 99) {
    throw ValidationError("n_permutations must be at least 99 (got " +
                          std::to_string(n_permutations) + ")");
  }
  check_statistic(sets, stat);
  std::vector<PackedSet> packed;
  for (const auto& set : sets) packed.push_back(pack(set));
  std::vector<std::int64_t> scratch;
  std::vector<std::vector<double>> per_set(packed.size());
  for (std::size_t i = 0; i < packed.size(); ++i) {
    per_set[i] = subgroup_vulnerability(packed[i], packed[i].subgroup, kind, scratch);
  }
  PermutationResult res;
  res.observed = statistic(per_set, stat);
  res.n_permutations = n_permutations;
  auto rng = make_rng(seed, {kPermTag});
  std::vector<std::vector<int>> z(packed.size());
  for (std::size_t i = 0; i < packed.size(); ++i) z[i] = packed[i].subgroup;
  int extreme = 0;
  std::vector<int> vals;
  for (int r = 0; r < n_permutations; ++r) {
    for (std::size_t i = 0; i < packed.size(); ++i) {
      // Shuffle the subgroup labels inside each (y, m) stratum.
      for (const auto& stratum : packed[i].strata) {
        vals.clear();
        for (auto j : stratum) vals.push_back(z[i][j]);
        std::shuffle(vals.begin(), vals.end(), rng);
        for (std::size_t t = 0; t < stratum.size(); ++t) z[i][stratum[t]] = vals[t];
      }
      per_set[i] = subgroup_vulnerability(packed[i], z[i], kind, scratch);
    }
    // Small slack so permutations tying the observed value count as extreme.
    if (statistic(per_set, stat) >= res.observed - 1e-12) ++extreme;
  }
  res.p_value = (1.0 + extreme) / (1.0 + n_permutations);
  return res;
}

std::vector<PairTest> pairwise_permutation_tests(std::span<const EvaluationSet> sets,
                                                 AdversaryKind kind, int n_permutations,
                                                 std::uint64_t seed, double alpha) {
  if (sets.empty()) throw ValidationError("no evaluation sets to test");
  const int k = sets.front().num_subgroups();
  std::vector<int> present(k, 0);
  for (const auto& s : sets)
    for (const auto& r : s.records()) present[r.subgroup] = 1;
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      if (present[a] && present[b]) pairs.emplace_back(a, b);
  std::vector<PairTest> out;
  const double threshold = pairs.empty() ? alpha : alpha / static_cast<double>(pairs.size());
  for (const auto& [a, b] : pairs) {
    const auto res = permutation_disparity_test(
        sets, kind, {a, b}, n_permutations,
        derive_seed(seed, {static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b)}));
    out.push_back({a, b, res.observed, res.p_value, threshold, res.p_value < threshold});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic populations

void SyntheticSpec::validate() const {
  if (num_subgroups < 1 || num_classes < 2 || dim < 1) {
    throw ValidationError("synthetic spec needs k >= 1, p >= 2, dim >= 1");
  }
  const auto k = static_cast<std::size_t>(num_subgroups);
  if (means.size() != k || scales.size() != k || sizes.size() != k || class_bias.size() != k) {
    throw ValidationError("synthetic spec: per-subgroup arrays must have length k");
  }
  for (std::size_t z = 0; z < k; ++z) {
    if (sizes[z] < 0) throw ValidationError("synthetic spec: negative subgroup size");
    if (means[z].size() != static_cast<std::size_t>(num_classes) ||
        scales[z].size() != static_cast<std::size_t>(num_classes) ||
        class_bias[z].size() != static_cast<std::size_t>(num_classes)) {
      throw ValidationError("synthetic spec: per-class arrays must have length p");
    }
    double total = 0.0;
    for (int y = 0; y < num_classes; ++y) {
      if (means[z][y].size() != static_cast<std::size_t>(dim)) {
        throw ValidationError("synthetic spec: mean vector length differs from dim");
      }
      if (scales[z][y] < 0.0) throw ValidationError("synthetic spec: negative scale");
      if (class_bias[z][y] < 0.0) throw ValidationError("synthetic spec: negative class bias");
      total += class_bias[z][y];
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ValidationError("synthetic spec: class bias of subgroup " + std::to_string(z) +
                            " sums to " + std::to_string(total));
    }
  }
}

SyntheticSpec parse_synthetic_spec(const std::string& json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    SyntheticSpec s;
    s.num_subgroups = j.at("num_subgroups").get<int>();
    s.num_classes = j.at("num_classes").get<int>();
    s.dim = j.at("dim").get<int>();
    s.means = j.at("means").get<decltype(s.means)>();
    s.scales = j.at("scales").get<decltype(s.scales)>();
    s.sizes = j.at("sizes").get<decltype(s.sizes)>();
    s.class_bias = j.at("class_bias").get<decltype(s.class_bias)>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed synthetic spec: ") + e.what());
  }
}

std::string synthetic_spec_to_json(const SyntheticSpec& s) {
  nlohmann::ordered_json j;
  j["num_subgroups"] = s.num_subgroups;
  j["num_classes"] = s.num_classes;
  j["dim"] = s.dim;
  j["means"] = s.means;
  j["scales"] = s.scales;
  j["sizes"] = s.sizes;
  j["class_bias"] = s.class_bias;
  j["seed"] = s.seed;
  return j.dump(2);
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read synthetic spec " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_synthetic_spec(ss.str());
}

Population synth_generate(const SyntheticSpec& spec) {
  spec.validate();
  Population pop;
  pop.num_classes = spec.num_classes;
  pop.num_subgroups = spec.num_subgroups;
  for (int z = 0; z < spec.num_subgroups; ++z) pop.subgroup_names.push_back("g" + std::to_string(z));
  for (int j = 0; j < spec.dim; ++j) pop.feature_names.push_back("x" + std::to_string(j));
  for (int z = 0; z < spec.num_subgroups; ++z) {
    auto rng = make_rng(spec.seed, {static_cast<std::uint64_t>(z)});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < spec.sizes[z]; ++i) {
      const double u = unif(rng);
      int y = 0;
      double acc = spec.class_bias[z][0];
      while (y + 1 < spec.num_classes && u >= acc) acc += spec.class_bias[z][++y];
      LabeledExample ex;
      ex.id = "syn:" + std::to_string(z) + ":" + std::to_string(i);
      ex.label = y;
      ex.subgroup = z;
      ex.features.resize(static_cast<std::size_t>(spec.dim));
      for (int d = 0; d < spec.dim; ++d) {
        ex.features[d] = spec.means[z][y][d] + spec.scales[z][y] * normal(rng);
      }
      pop.examples.push_back(std::move(ex));
    }
  }
  return pop;
}

std::string spec_fingerprint(const SyntheticSpec& spec, std::span<const int> masked_subgroups) {
  auto copy = spec;
  for (int z : masked_subgroups) {
    if (z >= 0 && static_cast<std::size_t>(z) < copy.sizes.size()) copy.sizes[z] = -1;
  }
  const auto text = synthetic_spec_to_json(copy);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

SweepPoint sweep_point(const SyntheticSpec& spec, int value, const std::string& hash,
                       const ModelRecipe& recipe, const StudyOptions& options) {
  const auto pop = synth_generate(spec);
  const auto study = run_shuffle_study(pop, recipe, options, "synthetic");
  return {value, hash, study.aggregate};
}

}  // namespace

SweepResult subgroup_size_sweep(const SyntheticSpec& spec, int target, std::span<const int> grid,
                                const ModelRecipe& recipe, const StudyOptions& options) {
  spec.validate();
  if (grid.empty()) throw ValidationError("sweep grid is empty");
  if (target < 0 || target >= spec.num_subgroups) throw ValidationError("target subgroup out of range");
  SweepResult out;
  out.variable = "target_size";
  out.target = target;
  const int masked[] = {target};
  const auto reference = spec_fingerprint(spec, masked);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && grid[i] <= grid[i - 1]) throw ValidationError("sweep grid must be increasing");
    if (grid[i] > spec.sizes[target]) {
      throw ValidationError("size " + std::to_string(grid[i]) + " exceeds the pool of " +
                            std::to_string(spec.sizes[target]));
    }
    auto point_spec = spec;
    point_spec.sizes[target] = grid[i];
    const auto hash = spec_fingerprint(point_spec, masked);
    if (hash != reference) throw Error("sweep changed a non-target parameter");
    out.points.push_back(sweep_point(point_spec, grid[i], hash, recipe, options));
  }
  return out;
}

SweepResult equal_representation_sweep(const SyntheticSpec& spec, std::span<const int> grid,
                                        const ModelRecipe& recipe, const StudyOptions& options) {
  spec.validate();
  if (grid.empty()) throw ValidationError("sweep grid is empty");
  SweepResult out;
  out.variable = "per_group_train_size";
  std::vector<int> all(spec.num_subgroups);
  std::iota(all.begin(), all.end(), 0);
  const auto reference = spec_fingerprint(spec, all);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && grid[i] <= grid[i - 1]) throw ValidationError("sweep grid must be increasing");
    auto point_spec = spec;
    for (int z = 0; z < spec.num_subgroups; ++z) {
      if (2 * grid[i] > spec.sizes[z]) {
        throw ValidationError("K = " + std::to_string(grid[i]) + " needs " +
                              std::to_string(2 * grid[i]) + " examples but subgroup " +
                              std::to_string(z) + " has " + std::to_string(spec.sizes[z]));
      }
      point_spec.sizes[z] = 2 * grid[i];
    }
    const auto hash = spec_fingerprint(point_spec, all);
    if (hash != reference) throw Error("sweep changed a non-swept parameter");
    out.points.push_back(sweep_point(point_spec, grid[i], hash, recipe, options));
  }
  return out;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("spearman: length mismatch");
  const std::size_t n = a.size();
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace mia
