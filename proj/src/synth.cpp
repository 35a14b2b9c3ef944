#include "nextvisit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <spdlog/spdlog.h>

namespace nextvisit {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Gap >= 1 day with mean `mean`, i.e. every later day is a visit with
// probability 1/mean.
long geometric_gap(Rng& rng, double mean) {
  const double q = 1.0 / mean;
  if (q >= 1.0) return 1;
  const double u = 1.0 - uniform01(rng);  // (0, 1]
  return 1 + static_cast<long>(std::floor(std::log(u) / std::log1p(-q)));
}

int poisson(Rng& rng, double mean) {
  const double limit = std::exp(-mean);
  int k = 0;
  double prod = uniform01(rng);
  while (prod > limit) {
    ++k;
    prod *= uniform01(rng);
  }
  return k;
}

double normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t pick(Rng& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string indexed(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02d", prefix, i);
  return buf;
}

struct Compiled {
  std::vector<std::vector<std::size_t>> cond_risk;  // indices into risk_factors
};

Compiled compile(const GeneratorConfig& cfg) {
  Compiled c;
  for (const auto& cond : cfg.conditions) {
    std::vector<std::size_t> idx;
    for (const auto& r : cond.risk) {
      auto it = std::find_if(cfg.risk_factors.begin(), cfg.risk_factors.end(),
                             [&](const RiskFactor& f) { return f.concept_name == r; });
      idx.push_back(static_cast<std::size_t>(it - cfg.risk_factors.begin()));
    }
    c.cond_risk.push_back(std::move(idx));
  }
  return c;
}

void generate_patient(const GeneratorConfig& cfg, const Compiled& comp, std::uint64_t seed, std::size_t index,
                      RawRecord& rec, PatientTruth& truth) {
  Rng rng = make_rng(seed, "patient", index);
  char id[32];
  std::snprintf(id, sizeof id, "P%06zu", index);
  rec.patient_id = id;
  rec.static_concepts = {"DEM:SEX_" + cfg.sexes[pick(rng, cfg.sexes.size())],
                         "DEM:RACE_" + cfg.races[pick(rng, cfg.races.size())]};
  const double age0 = cfg.age_min + uniform01(rng) * (cfg.age_max - cfg.age_min);
  const long span = cfg.follow_up_max_days - cfg.follow_up_min_days + 1;
  const long follow_up = cfg.follow_up_min_days + static_cast<long>(pick(rng, static_cast<std::size_t>(span)));

  std::vector<long> days{0};
  for (;;) {
    const long next = days.back() + geometric_gap(rng, cfg.mean_gap_days);
    if (next > follow_up && days.size() >= 2) break;
    days.push_back(next);
  }

  const std::size_t n_risk = cfg.risk_factors.size();
  const std::size_t n_cond = cfg.conditions.size();
  std::vector<char> acquired(n_risk, 0);
  std::vector<std::optional<long>> onset(n_cond);

  truth.patient_id = rec.patient_id;
  truth.first_day = 0;
  truth.last_day = days.back();
  for (const auto& c : cfg.conditions) truth.occurrences[c.name];

  for (std::size_t v = 0; v < days.size(); ++v) {
    const long day = days[v];
    RawVisit visit{day, {}};
    visit.events.push_back("AGE=" + fixed(age0 + static_cast<double>(day) / 365.25, 2));

    for (std::size_t c = 0; c < n_cond; ++c) {
      const auto& cond = cfg.conditions[c];
      bool emitted = false;
      if (!onset[c]) {
        double logit = cond.base_logit;
        for (std::size_t j = 0; j < cond.weights.size(); ++j)
          if (acquired[comp.cond_risk[c][j]]) logit += cond.weights[j];
        if (bernoulli(rng, sigmoid(logit))) {
          onset[c] = day;
          for (const auto& code : cond.codes) visit.events.push_back(code);
          emitted = true;
        }
      } else {
        for (const auto& code : cond.codes) {
          if (bernoulli(rng, cfg.persistence)) {
            visit.events.push_back(code);
            emitted = true;
          }
        }
      }
      if (emitted) truth.occurrences[cond.name].push_back(day);
    }

    for (std::size_t r = 0; r < n_risk; ++r) {
      const auto& f = cfg.risk_factors[r];
      if (acquired[r]) {
        if (bernoulli(rng, cfg.persistence)) visit.events.push_back(f.concept_name);
      } else if (bernoulli(rng, v == 0 ? f.prevalence : f.acquisition)) {
        acquired[r] = 1;
        visit.events.push_back(f.concept_name);
      }
    }

    for (int l = 0; l < cfg.n_labs; ++l) {
      if (!bernoulli(rng, cfg.lab_rate)) continue;
      double mean = 0.0;
      if (n_risk > 0 && acquired[static_cast<std::size_t>(l) % n_risk]) mean += cfg.lab_shift;
      visit.events.push_back(indexed("LAB:L", l) + "=" + fixed(mean + normal(rng), 4));
    }

    const int n_bg = poisson(rng, cfg.background_rate);
    const int pool = cfg.n_background_dx + cfg.n_background_rx;
    for (int e = 0; e < n_bg && pool > 0; ++e) {
      const int k = static_cast<int>(pick(rng, static_cast<std::size_t>(pool)));
      visit.events.push_back(k < cfg.n_background_dx ? indexed("DX:B", k)
                                                     : indexed("RX:B", k - cfg.n_background_dx));
    }
    rec.visits.push_back(std::move(visit));
  }
  for (std::size_t c = 0; c < n_cond; ++c) truth.onset[cfg.conditions[c].name] = onset[c];
}

}  // namespace

GeneratorConfig GeneratorConfig::desk_default() {
  GeneratorConfig cfg;
  for (int r = 0; r < 6; ++r) cfg.risk_factors.push_back({indexed("DX:RISK", r), 0.15, 0.01});
  cfg.conditions.push_back({"COND_A", {"DX:COND_A", "RX:COND_A"}, -9.0,
                            {"DX:RISK00", "DX:RISK01", "DX:RISK02"}, {2.5, 2.5, 2.5}});
  cfg.conditions.push_back({"COND_B", {"DX:COND_B", "RX:COND_B"}, -9.0,
                            {"DX:RISK03", "DX:RISK04", "DX:RISK05"}, {2.5, 2.5, 2.5}});
  return cfg;
}

GeneratorConfig GeneratorConfig::from_config(const KeyValueConfig& kv) {
  GeneratorConfig cfg = desk_default();
  cfg.n_patients = static_cast<std::size_t>(kv.get_int("n_patients", static_cast<long long>(cfg.n_patients)));
  cfg.mean_gap_days = kv.get_double("mean_gap_days", cfg.mean_gap_days);
  cfg.follow_up_min_days = kv.get_int("follow_up_min_days", cfg.follow_up_min_days);
  cfg.follow_up_max_days = kv.get_int("follow_up_max_days", cfg.follow_up_max_days);
  cfg.persistence = kv.get_double("persistence", cfg.persistence);
  cfg.age_min = kv.get_double("age_min", cfg.age_min);
  cfg.age_max = kv.get_double("age_max", cfg.age_max);
  if (auto v = kv.get_string_list("sexes")) cfg.sexes = *v;
  if (auto v = kv.get_string_list("races")) cfg.races = *v;
  cfg.background_rate = kv.get_double("background_rate", cfg.background_rate);
  cfg.n_background_dx = static_cast<int>(kv.get_int("n_background_dx", cfg.n_background_dx));
  cfg.n_background_rx = static_cast<int>(kv.get_int("n_background_rx", cfg.n_background_rx));
  cfg.n_labs = static_cast<int>(kv.get_int("n_labs", cfg.n_labs));
  cfg.lab_rate = kv.get_double("lab_rate", cfg.lab_rate);
  cfg.lab_shift = kv.get_double("lab_shift", cfg.lab_shift);
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(cfg.seed)));

  const auto risks = kv.subsections("risk");
  if (!risks.empty()) {
    cfg.risk_factors.clear();
    for (const auto& name : risks) {
      const std::string p = "risk." + name + ".";
      cfg.risk_factors.push_back({kv.get_string(p + "concept", "DX:" + name), kv.get_double(p + "prevalence", 0.0),
                                  kv.get_double(p + "acquisition", 0.0)});
    }
  }
  const auto conds = kv.subsections("condition");
  if (!conds.empty()) {
    cfg.conditions.clear();
    for (const auto& name : conds) {
      const std::string p = "condition." + name + ".";
      PlantedCondition c;
      c.name = name;
      c.codes = kv.get_string_list(p + "codes").value_or(std::vector<std::string>{"DX:" + name});
      c.base_logit = kv.get_double(p + "base_logit", c.base_logit);
      c.risk = kv.get_string_list(p + "risk").value_or(std::vector<std::string>{});
      c.weights = kv.get_double_list(p + "weights").value_or(std::vector<double>{});
      cfg.conditions.push_back(std::move(c));
    }
  }
  cfg.validate();
  return cfg;
}

void GeneratorConfig::validate() const {
  if (!(persistence >= 0.0 && persistence <= 1.0)) throw ConfigError("persistence must lie in [0, 1]");
  if (!(mean_gap_days >= 1.0)) throw ConfigError("mean_gap_days must be >= 1");
  if (follow_up_min_days < 1 || follow_up_max_days < follow_up_min_days)
    throw ConfigError("follow-up range must satisfy 1 <= min <= max");
  if (sexes.empty() || races.empty()) throw ConfigError("sexes and races must be non-empty");
  if (background_rate < 0.0 || lab_rate < 0.0 || lab_rate > 1.0) throw ConfigError("event rates out of range");
  std::set<std::string> risk_names;
  for (const auto& f : risk_factors) {
    if (f.prevalence < 0 || f.prevalence > 1 || f.acquisition < 0 || f.acquisition > 1)
      throw ConfigError("risk factor '" + f.concept_name + "': probabilities must lie in [0, 1]");
    risk_names.insert(f.concept_name);
  }
  for (const auto& c : conditions) {
    if (c.codes.empty()) throw ConfigError("condition '" + c.name + "' has no codes");
    if (!std::isfinite(c.base_logit)) throw ConfigError("condition '" + c.name + "': base_logit must be finite");
    if (c.risk.size() != c.weights.size())
      throw ConfigError("condition '" + c.name + "': risk and weights differ in length");
    if (c.risk.size() > 16) throw ConfigError("condition '" + c.name + "': at most 16 risk factors");
    for (std::size_t j = 0; j < c.risk.size(); ++j) {
      if (!risk_names.count(c.risk[j])) throw ConfigError("condition '" + c.name + "': unknown risk factor " + c.risk[j]);
      if (!std::isfinite(c.weights[j])) throw ConfigError("condition '" + c.name + "': weights must be finite");
    }
  }
}

std::map<std::string, std::vector<std::string>> GeneratorConfig::code_sets() const {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& c : conditions) out[c.name] = c.codes;
  return out;
}

Cohort generate_cohort(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  const Compiled comp = compile(config);
  Cohort cohort;
  cohort.records.resize(config.n_patients);
  cohort.truth.resize(config.n_patients);
  for (std::size_t i = 0; i < config.n_patients; ++i)
    generate_patient(config, comp, seed, i, cohort.records[i], cohort.truth[i]);
  return cohort;
}

double analytic_onset_prob(const OracleQuery& query, const GeneratorConfig& config) {
  auto it = std::find_if(config.conditions.begin(), config.conditions.end(),
                         [&](const PlantedCondition& c) { return c.name == query.condition; });
  if (it == config.conditions.end()) throw ConfigError("unknown condition '" + query.condition + "'");
  if (query.gap_days < 0 || query.horizon_days < query.gap_days)
    throw ConfigError("oracle query needs 0 <= gap <= horizon");
  const PlantedCondition& cond = *it;
  const std::set<std::string> seen(query.history.begin(), query.history.end());
  for (const auto& code : cond.codes)
    if (seen.count(code)) throw DataError("already onset");

  const std::size_t k = cond.risk.size();
  const std::size_t n_states = std::size_t{1} << k;
  std::vector<double> acq(k), hazard(n_states);
  std::size_t start = 0;
  for (std::size_t j = 0; j < k; ++j) {
    for (const auto& f : config.risk_factors)
      if (f.concept_name == cond.risk[j]) acq[j] = f.acquisition;
    if (seen.count(cond.risk[j])) start |= std::size_t{1} << j;
  }
  for (std::size_t s = 0; s < n_states; ++s) {
    double logit = cond.base_logit;
    for (std::size_t j = 0; j < k; ++j)
      if (s >> j & 1) logit += cond.weights[j];
    hazard[s] = sigmoid(logit);
  }

  const double q = std::min(1.0, 1.0 / config.mean_gap_days);
  std::vector<double> dist(n_states, 0.0), next(n_states);
  dist[start] = 1.0;
  double hit = 0.0;
  for (long day = 1; day <= query.horizon_days; ++day) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < n_states; ++s) {
      const double m = dist[s];
      if (m == 0.0) continue;
      next[s] += m * (1.0 - q);
      if (day > query.gap_days) hit += m * q * hazard[s];
      const double survive = m * q * (1.0 - hazard[s]);
      const std::size_t missing = (n_states - 1) & ~s;
      // Enumerate every subset of the missing factors acquired at this visit.
      for (std::size_t a = missing;; a = (a - 1) & missing) {
        double p = survive;
        for (std::size_t j = 0; j < k; ++j)
          if (missing >> j & 1) p *= (a >> j & 1) ? acq[j] : 1.0 - acq[j];
        next[s | a] += p;
        if (a == 0) break;
      }
    }
    dist.swap(next);
  }
  return hit;
}

}  // namespace nextvisit
