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

#include "mia/overfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mia/adversary.hpp"

namespace mia {

GapTensor compute_gaps(const FrequencyTable& table) {
  GapTensor g;
  g.bins = table.bins();
  g.num_classes = table.num_classes();
  g.num_subgroups = table.num_subgroups();
  const int p = g.num_classes, k = g.num_subgroups, bins = g.bins;
  g.gamma.assign(static_cast<std::size_t>(bins) * p, 0.0);
  g.gamma_z.assign(static_cast<std::size_t>(bins) * p * k, 0.0);
  g.defined.assign(p, 0);
  g.defined_z.assign(static_cast<std::size_t>(p) * k, 0);
  for (int y = 0; y < p; ++y) {
    g.defined[y] = table.class_total(1, y) > 0 && table.class_total(0, y) > 0;
    for (int z = 0; z < k; ++z) {
      g.defined_z[static_cast<std::size_t>(y) * k + z] =
          table.cell_total(1, y, z) > 0 && table.cell_total(0, y, z) > 0;
    }
  }
  for (int b = 0; b < bins; ++b) {
    for (int y = 0; y < p; ++y) {
      if (g.defined[y]) {
        g.gamma[static_cast<std::size_t>(b) * p + y] =
            *table.conditional(b, y, 1) - *table.conditional(b, y, 0);
      }
      for (int z = 0; z < k; ++z) {
        if (!g.is_defined(y, z)) continue;
        g.gamma_z[(static_cast<std::size_t>(b) * p + y) * k + z] =
            *table.conditional(b, y, z, 1) - *table.conditional(b, y, z, 0);
      }
    }
  }
  return g;
}

OverfitProfile compute_profile(const FrequencyTable& table, const GapTensor& gaps) {
  OverfitProfile pr;
  const int p = table.num_classes(), k = table.num_subgroups();
  pr.num_classes = p;
  pr.num_subgroups = k;
  pr.tau.assign(p, 0.0);
  pr.tau_z.assign(static_cast<std::size_t>(p) * k, 0.0);
  pr.rho_z.assign(static_cast<std::size_t>(p) * k, 0.0);
  pr.pr_y.assign(p, 0.0);
  pr.pr_z.assign(k, 0.0);
  for (int y = 0; y < p; ++y) {
    pr.pr_y[y] = table.pr_y(y);
    if (!gaps.is_defined(y)) ++pr.undefined_class_cells;
    double s = 0.0;
    for (int b = 0; b < gaps.bins; ++b) s += std::abs(gaps.at(b, y));
    pr.tau[y] = 0.5 * s;
    for (int z = 0; z < k; ++z) {
      if (!gaps.is_defined(y, z)) ++pr.undefined_subgroup_cells;
      double sz = 0.0;
      for (int b = 0; b < gaps.bins; ++b) sz += std::abs(gaps.at(b, y, z));
      pr.tau_z[static_cast<std::size_t>(y) * k + z] = 0.5 * sz;
    }
  }
  for (int z = 0; z < k; ++z) {
    pr.pr_z[z] = table.pr_z(z);
    const auto nz = table.subgroup_total(z);
    if (nz == 0) continue;
    for (int y = 0; y < p; ++y) {
      pr.rho_z[static_cast<std::size_t>(y) * k + z] =
          static_cast<double>(table.cell_total(0, y, z) + table.cell_total(1, y, z)) /
          static_cast<double>(nz);
    }
  }
  return pr;
}

OverfitProfile compute_profile(const FrequencyTable& table) {
  return compute_profile(table, compute_gaps(table));
}

ClosedFormVulnerability closed_form_vulnerability(const OverfitProfile& profile) {
  double reg = 0.0, disc = 0.0;
  for (int y = 0; y < profile.num_classes; ++y) {
    reg += profile.pr_y[y] * profile.tau[y];
    for (int z = 0; z < profile.num_subgroups; ++z) {
      disc += profile.pr_z[z] * profile.rho_at(y, z) * profile.tau_at(y, z);
    }
  }
  return {0.5 + 0.5 * reg, 0.5 + 0.5 * disc};
}

namespace {

// sum_y rho_z(y) sum_b 1[gamma(b,y) > 0] gamma_z(b,y)
double regular_subgroup_term(const OverfitProfile& profile, const GapTensor& gaps, int z) {
  double s = 0.0;
  for (int y = 0; y < profile.num_classes; ++y) {
    double inner = 0.0;
    for (int b = 0; b < gaps.bins; ++b) {
      if (gaps.at(b, y) > 0.0) inner += gaps.at(b, y, z);
    }
    s += profile.rho_at(y, z) * inner;
  }
  return s;
}

double discriminating_subgroup_term(const OverfitProfile& profile, int z) {
  double s = 0.0;
  for (int y = 0; y < profile.num_classes; ++y) s += profile.rho_at(y, z) * profile.tau_at(y, z);
  return s;
}

bool subgroup_present(const OverfitProfile& profile, int z) {
  for (int y = 0; y < profile.num_classes; ++y) {
    if (profile.rho_at(y, z) > 0.0) return true;
  }
  return false;
}

}  // namespace

SubgroupClosedForm closed_form_subgroup_vulnerability(const OverfitProfile& profile,
                                                      const GapTensor& gaps) {
  SubgroupClosedForm out;
  out.regular.resize(profile.num_subgroups);
  out.discriminating.resize(profile.num_subgroups);
  for (int z = 0; z < profile.num_subgroups; ++z) {
    if (!subgroup_present(profile, z)) continue;
    out.regular[z] = 0.5 + 0.5 * regular_subgroup_term(profile, gaps, z);
    out.discriminating[z] = 0.5 + 0.5 * discriminating_subgroup_term(profile, z);
  }
  return out;
}

DisparityResiduals disparity_residuals(const OverfitProfile& profile, const GapTensor& gaps,
                                       int z, int z_other) {
  for (int s : {z, z_other}) {
    if (s < 0 || s >= profile.num_subgroups || !subgroup_present(profile, s)) {
      throw ValidationError("subgroup " + std::to_string(s) + " has no records");
    }
  }
  DisparityResiduals r;
  r.discriminating =
      discriminating_subgroup_term(profile, z) - discriminating_subgroup_term(profile, z_other);
  r.regular = regular_subgroup_term(profile, gaps, z) - regular_subgroup_term(profile, gaps, z_other);
  return r;
}

GeoCheck geo_check(const FrequencyTable& table, double tol) {
  GeoCheck out;
  const int p = table.num_classes(), k = table.num_subgroups();
  for (int m = 0; m < 2; ++m) {
    for (int y = 0; y < p; ++y) {
      for (int z = 0; z < k; ++z) {
        if (table.cell_total(m, y, z) == 0) continue;
        for (int z2 = z + 1; z2 < k; ++z2) {
          if (table.cell_total(m, y, z2) == 0) continue;
          for (int b = 0; b < table.bins(); ++b) {
            const double dev = std::abs(*table.conditional(b, y, z, m) -
                                        *table.conditional(b, y, z2, m));
            if (dev > out.max_deviation || (!out.witness && dev == out.max_deviation)) {
              out.max_deviation = dev;
              out.witness = GeoWitness{y, b, m, z, z2};
            }
          }
        }
      }
    }
  }
  out.holds = out.max_deviation <= tol;
  return out;
}

bool geo_no_bias_implication_check(const FrequencyTable& table) {
  const auto geo = geo_check(table, 0.0);
  if (!geo.holds) {
    std::ostringstream msg;
    msg << "precondition failed: GEO does not hold (max deviation " << geo.max_deviation << ")";
    throw GeoPreconditionError(GeoPrecondition::kGeoViolated, msg.str());
  }
  const auto gaps = compute_gaps(table);
  const auto profile = compute_profile(table, gaps);
  const int p = profile.num_classes, k = profile.num_subgroups;
  for (int z = 0; z < k; ++z) {
    if (!subgroup_present(profile, z)) continue;
    for (int z2 = z + 1; z2 < k; ++z2) {
      if (!subgroup_present(profile, z2)) continue;
      for (int y = 0; y < p; ++y) {
        if (profile.rho_at(y, z) != profile.rho_at(y, z2)) {
          throw GeoPreconditionError(
              GeoPrecondition::kClassBiasPresent,
              "precondition failed: class bias differs between subgroups " + std::to_string(z) +
                  " and " + std::to_string(z2));
        }
      }
    }
  }
  const auto cf = closed_form_subgroup_vulnerability(profile, gaps);
  for (int z = 0; z < k; ++z) {
    for (int z2 = z + 1; z2 < k; ++z2) {
      if (!cf.regular[z] || !cf.regular[z2]) continue;
      if (std::abs(*cf.regular[z] - *cf.regular[z2]) > 1e-12) return false;
      if (std::abs(*cf.discriminating[z] - *cf.discriminating[z2]) > 1e-12) return false;
    }
  }
  return true;
}

namespace {

IdentityResult make_result(std::string name, double residual, double tol, std::string detail = {}) {
  IdentityResult r{std::move(name), residual, tol, residual <= tol, std::move(detail)};
  if (std::isnan(residual)) r.passed = false;
  return r;
}

double max_optional_gap(const std::vector<std::optional<double>>& a,
                        const std::vector<std::optional<double>>& b) {
  double worst = 0.0;
  for (std::size_t z = 0; z < a.size(); ++z) {
    if (a[z].has_value() != b[z].has_value()) return std::numeric_limits<double>::infinity();
    if (a[z]) worst = std::max(worst, std::abs(*a[z] - *b[z]));
  }
  return worst;
}

}  // namespace

std::vector<IdentityResult> verify_identities(const EvaluationSet& set,
                                              const FrequencyTable& table, double tol) {
  std::vector<IdentityResult> out;
  const auto regular = evaluate_vulnerability(fit_regular_adversary(table), set);
  const auto disc = evaluate_vulnerability(fit_discriminating_adversary(table), set);
  const auto gaps = compute_gaps(table);
  const auto profile = compute_profile(table, gaps);
  const auto cf = closed_form_vulnerability(profile);
  const auto cfz = closed_form_subgroup_vulnerability(profile, gaps);
  const int k = table.num_subgroups();

  out.push_back(make_result("closed_form.regular", std::abs(regular.vulnerability - cf.regular), tol));
  out.push_back(
      make_result("closed_form.discriminating", std::abs(disc.vulnerability - cf.discriminating), tol));
  out.push_back(make_result("closed_form.subgroup_discriminating",
                            max_optional_gap(disc.by_subgroup, cfz.discriminating), tol));
  out.push_back(
      make_result("closed_form.subgroup_regular", max_optional_gap(regular.by_subgroup, cfz.regular), tol));

  double worst_disc = 0.0, worst_reg = 0.0;
  for (int z = 0; z < k; ++z) {
    for (int z2 = z + 1; z2 < k; ++z2) {
      if (!disc.by_subgroup[z] || !disc.by_subgroup[z2]) continue;
      DisparityResiduals res;
      try {
        res = disparity_residuals(profile, gaps, z, z2);
      } catch (const ValidationError&) {
        worst_disc = worst_reg = std::numeric_limits<double>::infinity();
        continue;
      }
      worst_disc = std::max(worst_disc, std::abs(0.5 * std::abs(res.discriminating) -
                                                 *disc.disparity[z][z2]));
      worst_reg =
          std::max(worst_reg, std::abs(0.5 * std::abs(res.regular) - *regular.disparity[z][z2]));
    }
  }
  out.push_back(make_result("overfit_bound.discriminating_residual", worst_disc, tol));
  out.push_back(make_result("overfit_bound.regular_residual", worst_reg, tol));

  const double advantage = disc.vulnerability - regular.vulnerability;
  out.push_back(make_result("dominance", std::max(0.0, -advantage), tol,
                            std::abs(advantage) <= tol ? "equality (V^D = V^R)"
                                                       : "strict (V^D > V^R)"));

  auto aggregation = [&](const AdversaryReport& rep) {
    double s = 0.0;
    for (int z = 0; z < k; ++z) {
      if (rep.by_subgroup[z]) s += table.pr_z(z) * *rep.by_subgroup[z];
    }
    return std::abs(s - rep.vulnerability);
  };
  out.push_back(make_result("aggregation.regular", aggregation(regular), tol));
  out.push_back(make_result("aggregation.discriminating", aggregation(disc), tol));

  double gap_sum = 0.0;
  for (int y = 0; y < gaps.num_classes; ++y) {
    double s = 0.0;
    for (int b = 0; b < gaps.bins; ++b) s += gaps.at(b, y);
    gap_sum = std::max(gap_sum, std::abs(s));
    for (int z = 0; z < k; ++z) {
      double sz = 0.0;
      for (int b = 0; b < gaps.bins; ++b) sz += gaps.at(b, y, z);
      gap_sum = std::max(gap_sum, std::abs(sz));
    }
  }
  out.push_back(make_result("gap_sum", gap_sum, tol));

  if (geo_check(table, 0.0).holds) {
    out.push_back(make_result("geo.subgroup_equality",
                              max_optional_gap(regular.by_subgroup, disc.by_subgroup), tol));
  } else {
    out.push_back(make_result("geo.subgroup_equality", 0.0, tol, "skipped: GEO does not hold"));
  }
  return out;
}

}  // namespace mia
