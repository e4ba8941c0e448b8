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

// Distributional overfitting of a classifier, measured on a FrequencyTable.
//
//   gamma(b, y)    = Pr[b | y, in]    - Pr[b | y, out]
//   gamma_z(b, y)  = Pr[b | y, z, in] - Pr[b | y, z, out]
//   tau(y)         = 1/2 sum_b |gamma(b, y)|        (total variation)
//   tau_z(y)       = 1/2 sum_b |gamma_z(b, y)|
//   rho_z(y)       = Pr[y | z]                      (class bias)
//
// On a balanced, stratified evaluation set these quantities determine the
// in-sample accuracy of both Bayes adversaries exactly:
//
//   V^R   = 1/2 + 1/2 sum_y Pr[y] tau(y)
//   V^D   = 1/2 + 1/2 sum_y sum_z Pr[z] rho_z(y) tau_z(y)
//   V^D_z = 1/2 + 1/2 sum_y rho_z(y) tau_z(y)
//   V^R_z = 1/2 + 1/2 sum_y rho_z(y) sum_b 1[gamma(b, y) > 0] gamma_z(b, y)
//
// Note the last form mixes the global indicator with subgroup gaps.

#ifndef MIA_OVERFIT_HPP_
#define MIA_OVERFIT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mia/audit_core.hpp"

namespace mia {

struct GapTensor {
  int bins = 0;
  int num_classes = 0;
  int num_subgroups = 0;
  std::vector<double> gamma;             // [b][y]
  std::vector<double> gamma_z;           // [b][y][z]
  std::vector<std::uint8_t> defined;     // [y]: both m-cells populated
  std::vector<std::uint8_t> defined_z;   // [y][z]

  double at(int b, int y) const { return gamma[static_cast<std::size_t>(b) * num_classes + y]; }
  double at(int b, int y, int z) const {
    return gamma_z[(static_cast<std::size_t>(b) * num_classes + y) * num_subgroups + z];
  }
  bool is_defined(int y) const { return defined[y] != 0; }
  bool is_defined(int y, int z) const {
    return defined_z[static_cast<std::size_t>(y) * num_subgroups + z] != 0;
  }
};

// Undefined cells (either conditional missing) carry gap 0 and are flagged.
GapTensor compute_gaps(const FrequencyTable& table);

struct OverfitProfile {
  int num_classes = 0;
  int num_subgroups = 0;
  std::vector<double> tau;      // [y]
  std::vector<double> tau_z;    // [y][z]
  std::vector<double> rho_z;    // [y][z], Pr[y | z]; 0 for empty subgroups
  std::vector<double> pr_y;     // [y]
  std::vector<double> pr_z;     // [z]
  // Coverage diagnostic: (y) and (y, z) cells whose gaps are undefined.
  int undefined_class_cells = 0;
  int undefined_subgroup_cells = 0;

  double tau_at(int y, int z) const { return tau_z[static_cast<std::size_t>(y) * num_subgroups + z]; }
  double rho_at(int y, int z) const { return rho_z[static_cast<std::size_t>(y) * num_subgroups + z]; }
};

OverfitProfile compute_profile(const FrequencyTable& table, const GapTensor& gaps);
OverfitProfile compute_profile(const FrequencyTable& table);

struct ClosedFormVulnerability {
  double regular = 0.0;
  double discriminating = 0.0;
};

ClosedFormVulnerability closed_form_vulnerability(const OverfitProfile& profile);

struct SubgroupClosedForm {
  std::vector<std::optional<double>> regular;         // [z]
  std::vector<std::optional<double>> discriminating;  // [z]
};

// Empty entries for subgroups with no records.
SubgroupClosedForm closed_form_subgroup_vulnerability(const OverfitProfile& profile,
                                                      const GapTensor& gaps);

struct DisparityResiduals {
  double discriminating = 0.0;  // sum_y (rho_z tau_z - rho_z' tau_z')
  double regular = 0.0;         // sum_{y,b} 1[gamma > 0] (rho_z gamma_z - rho_z' gamma_z')
};

// Signed residuals whose halves equal V_z - V_z' for each adversary. Throws
// ValidationError if either subgroup has no records.
DisparityResiduals disparity_residuals(const OverfitProfile& profile, const GapTensor& gaps,
                                       int z, int z_other);

struct GeoWitness {
  int label = 0;
  int bin = 0;
  int member = 0;
  int subgroup = 0;
  int other_subgroup = 0;
};

struct GeoCheck {
  bool holds = true;
  double max_deviation = 0.0;
  std::optional<GeoWitness> witness;  // cell attaining max_deviation
};

// Generalized equality of odds: Pr[b | y, z, m] == Pr[b | y, z', m] for all
// defined cells, within `tol`.
GeoCheck geo_check(const FrequencyTable& table, double tol);

enum class GeoPrecondition { kSatisfied, kGeoViolated, kClassBiasPresent };

class GeoPreconditionError : public ValidationError {
 public:
  GeoPreconditionError(GeoPrecondition which, const std::string& what)
      : ValidationError(what), which_(which) {}
  GeoPrecondition which() const { return which_; }

 private:
  GeoPrecondition which_;
};

// Under GEO and equal class bias across subgroups, both disparity matrices
// (closed form) must vanish. Throws GeoPreconditionError when GEO or the
// class-bias condition does not hold; returns whether all disparities are
// within 1e-12.
bool geo_no_bias_implication_check(const FrequencyTable& table);

// One checked identity and its absolute residual.
struct IdentityResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::string detail;
};

// Cross-checks the measured accuracies on `set` against the closed forms
// computed from `table`. Normally `table` is estimate_tables(set); a
// different table makes the affected identities fail.
std::vector<IdentityResult> verify_identities(const EvaluationSet& set,
                                              const FrequencyTable& table, double tol);

}  // namespace mia

#endif  // MIA_OVERFIT_HPP_
