#include <doctest.h>

#include <cmath>

#include "nextvisit/records.hpp"
#include "nextvisit/synth.hpp"

using namespace nextvisit;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

GeneratorConfig one_condition(double base, double persistence) {
  GeneratorConfig c;
  c.n_patients = 200;
  c.mean_gap_days = 20;
  c.follow_up_min_days = 400;
  c.follow_up_max_days = 600;
  c.persistence = persistence;
  c.risk_factors = {{"DX:R0", 0.3, 0.05}, {"DX:R1", 0.2, 0.02}};
  c.conditions = {{"C", {"DX:C", "RX:C"}, base, {"DX:R0", "DX:R1"}, {1.5, 1.0}}};
  return c;
}

std::vector<long> code_days(const RawRecord& r, const std::string& code) {
  std::vector<long> out;
  for (const auto& v : r.visits)
    if (std::find(v.events.begin(), v.events.end(), code) != v.events.end()) out.push_back(v.day);
  return out;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("persistence 1 keeps the condition in every later visit") {
  auto cfg = one_condition(-2.0, 1.0);
  auto c = generate_cohort(cfg, 3);
  int with_onset = 0;
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    auto on = c.truth[i].onset.at("C");
    if (!on) continue;
    ++with_onset;
    auto days = code_days(c.records[i], "DX:C");
    std::size_t later = 0;
    for (const auto& v : c.records[i].visits) later += v.day >= *on;
    CHECK(days.size() == later);
    CHECK(days.front() == *on);
  }
  CHECK(with_onset > 50);
}

TEST_CASE("persistence 0 emits the condition exactly once") {
  auto c = generate_cohort(one_condition(-2.0, 0.0), 4);
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    auto n = code_days(c.records[i], "DX:C").size();
    CHECK(n == (c.truth[i].onset.at("C") ? 1u : 0u));
  }
}

TEST_CASE("negligible hazard gives no onsets") {
  auto cfg = one_condition(-60.0, 0.9);
  cfg.n_patients = 1000;
  cfg.conditions[0].weights = {0.0, 0.0};
  auto c = generate_cohort(cfg, 5);
  for (const auto& t : c.truth) CHECK_FALSE(t.onset.at("C").has_value());
}

TEST_CASE("recurrences outnumber onsets under high persistence") {
  auto c = generate_cohort(one_condition(-3.0, 0.85), 6);
  std::size_t onsets = 0, repeats = 0;
  for (const auto& t : c.truth) {
    const auto& occ = t.occurrences.at("C");
    if (occ.empty()) continue;
    ++onsets;
    repeats += occ.size() - 1;
  }
  CHECK(repeats > onsets);
}

TEST_CASE("generation is deterministic and per-patient seeded") {
  auto cfg = one_condition(-3.0, 0.9);
  auto a = generate_cohort(cfg, 9), b = generate_cohort(cfg, 9);
  CHECK(serialize_raw_records(a.records) == serialize_raw_records(b.records));
  CHECK(serialize_truth(a.truth) == serialize_truth(b.truth));
  cfg.n_patients = 20;
  auto prefix = generate_cohort(cfg, 9);
  for (std::size_t i = 0; i < 20; ++i) CHECK(serialize_raw_records({prefix.records[i]}) == serialize_raw_records({a.records[i]}));
  for (const auto& r : a.records) {
    CHECK(r.visits.size() >= 2);
    CHECK(r.visits.front().day == 0);
  }
}

TEST_CASE("oracle closed form with daily visits and no risk factors") {
  GeneratorConfig cfg;
  cfg.mean_gap_days = 1.0;
  cfg.conditions = {{"C", {"DX:C"}, -3.0, {}, {}}};
  const double p = sigm(-3.0);
  CHECK(analytic_onset_prob({{}, "C", 10, 0}, cfg) == doctest::Approx(1.0 - std::pow(1.0 - p, 10)).epsilon(1e-12));
  CHECK(analytic_onset_prob({{}, "C", 10, 3}, cfg) ==
        doctest::Approx(std::pow(1.0 - p, 3) - std::pow(1.0 - p, 10)).epsilon(1e-12));
  CHECK(analytic_onset_prob({{}, "C", 5, 5}, cfg) == 0.0);
  CHECK_THROWS_AS(analytic_onset_prob({{"DX:C"}, "C", 10, 0}, cfg), DataError);
  CHECK_THROWS_AS(analytic_onset_prob({{}, "C", 3, 5}, cfg), ConfigError);
}

TEST_CASE("oracle agrees with simulation") {
  auto cfg = one_condition(-4.0, 0.9);
  cfg.n_patients = 40000;
  cfg.mean_gap_days = 15;
  cfg.follow_up_min_days = cfg.follow_up_max_days = 300;
  cfg.background_rate = 0.0;
  cfg.n_labs = 0;
  auto c = generate_cohort(cfg, 11);
  // condition on visit 0: no onset, risk set exactly {R0}
  std::size_t n = 0, hits = 0;
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    const auto& ev = c.records[i].visits[0].events;
    auto has = [&](const char* s) { return std::find(ev.begin(), ev.end(), s) != ev.end(); };
    if (has("DX:C") || !has("DX:R0") || has("DX:R1")) continue;
    ++n;
    auto on = c.truth[i].onset.at("C");
    if (on && *on > 60 && *on <= 240) ++hits;
  }
  const double q = analytic_onset_prob({{"DX:R0"}, "C", 240, 60}, cfg);
  const double est = static_cast<double>(hits) / static_cast<double>(n);
  const double se = std::sqrt(q * (1 - q) / static_cast<double>(n));
  CAPTURE(n);
  CAPTURE(q);
  CHECK(std::abs(est - q) < 3.0 * se);
}

TEST_CASE("config file overrides") {
  auto kv = KeyValueConfig::parse(
      "n_patients = 12\npersistence = 0.5\n[risk.R]\nconcept = \"DX:R\"\nprevalence = 0.1\nacquisition = 0.01\n"
      "[condition.X]\ncodes = [\"DX:X\"]\nbase_logit = -5\nrisk = [\"DX:R\"]\nweights = [2.0]\n");
  auto cfg = GeneratorConfig::from_config(kv);
  CHECK(cfg.n_patients == 12);
  REQUIRE(cfg.conditions.size() == 1);
  CHECK(cfg.conditions[0].weights[0] == 2.0);
  CHECK(cfg.code_sets().at("X") == std::vector<std::string>{"DX:X"});
  CHECK_THROWS_AS(GeneratorConfig::from_config(KeyValueConfig::parse("persistence = 2\n")), ConfigError);
}

}  // TEST_SUITE
