#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nextvisit/config.hpp"
#include "nextvisit/records.hpp"

namespace nextvisit {

/// A chronic risk factor: present at the first visit with `prevalence`,
/// acquired at each later visit with `acquisition`.
struct RiskFactor {
  std::string concept_name;  // e.g. "DX:RISK0"
  double prevalence = 0.0;
  double acquisition = 0.0;
};

/// Planted condition. Onset at a visit is Bernoulli(sigmoid(base + sum of
/// weights of risk factors acquired at earlier visits)).
struct PlantedCondition {
  std::string name;
  std::vector<std::string> codes;  // S_c, all emitted at onset
  double base_logit = -6.0;
  std::vector<std::string> risk;   // risk factor concepts
  std::vector<double> weights;     // per-visit log-odds increments
};

struct GeneratorConfig {
  std::size_t n_patients = 5000;
  double mean_gap_days = 90.0;
  long follow_up_min_days = 1825;
  long follow_up_max_days = 2920;
  double persistence = 0.9;  // rho
  double age_min = 30.0;
  double age_max = 80.0;
  std::vector<std::string> sexes{"F", "M"};
  std::vector<std::string> races{"A", "B", "C"};
  double background_rate = 2.0;  // Poisson mean of background events per visit
  int n_background_dx = 30;
  int n_background_rx = 15;
  int n_labs = 3;
  double lab_rate = 0.5;
  double lab_shift = 1.5;  // mean shift of lab i while risk factor (i mod n_risk) is present
  std::vector<RiskFactor> risk_factors;
  std::vector<PlantedCondition> conditions;
  std::uint64_t seed = 1;

  /// Desk-scale cohort with two planted conditions.
  static GeneratorConfig desk_default();
  static GeneratorConfig from_config(const KeyValueConfig& kv);
  void validate() const;
  std::map<std::string, std::vector<std::string>> code_sets() const;
};

struct Cohort {
  std::vector<RawRecord> records;
  std::vector<PatientTruth> truth;
};

/// Patients are generated independently from per-patient derived seeds.
Cohort generate_cohort(const GeneratorConfig& config, std::uint64_t seed);

struct OracleQuery {
  std::vector<std::string> history;  // concepts observed up to and including the anchor visit
  std::string condition;
  long horizon_days = 730;
  long gap_days = 365;
};

/// Exact P(first onset in (t+G, t+H]) given the history, assuming follow-up
/// extends past t+H. Later days are visits independently with probability
/// 1/mean_gap (memoryless gaps); the DP runs over days and risk-factor subsets.
/// Throws DataError("already onset") when the history contains the condition.
double analytic_onset_prob(const OracleQuery& query, const GeneratorConfig& config);

}  // namespace nextvisit
