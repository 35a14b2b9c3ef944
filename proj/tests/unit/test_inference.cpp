#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "nextvisit/inference.hpp"

using namespace nextvisit;

namespace {

// Emits token 5 with probability p at every simulated visit.
struct CoinEmitter {
  double p = 0.1;
  std::vector<TokenId> next_visit(double, Rng& rng) {
    if (uniform01(rng) < p) return {5};
    return {};
  }
};

// Fixed logits, records what was pushed.
struct FixedSource {
  RowVec<double> z;
  std::vector<TokenId> pushed;
  const RowVec<double>& logits() const { return z; }
  void push(TokenId t) { pushed.push_back(t); }
};

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("code-set pooling") {
  RowVec<double> z = RowVec<double>::Zero(6);
  z(2) = 1.0;
  z(4) = -2.0;
  CodeSet cs{"c", {2, 4}};
  CHECK(pool_code_set(z, cs, Pooling::SumLogits) == doctest::Approx(1.0 / (1.0 + std::exp(1.0))));
  const double p2 = 1.0 / (1.0 + std::exp(-1.0)), p4 = 1.0 / (1.0 + std::exp(2.0));
  CHECK(pool_code_set(z, cs, Pooling::NoisyOr) == doctest::Approx(1.0 - (1.0 - p2) * (1.0 - p4)));
  CHECK_THROWS_AS(pool_code_set(z, CodeSet{"e", {}}, Pooling::NoisyOr), ConfigError);
  CHECK(pooling_from_string("noisy_or") == Pooling::NoisyOr);
  CHECK_THROWS_AS(pooling_from_string("max"), ConfigError);
}

TEST_CASE("horizon query is pure and depends on the horizon") {
  auto v = fixtures::tiny_vocab();
  auto c = fixtures::tiny_model(static_cast<int>(v.size()));
  auto p = init_params<double>(c, 2);
  Rng rng = make_rng(4, "i");
  auto rec = fixtures::random_record(v, rng, 5);
  auto a = horizon_query(p, c, rec, 1, 4, 365.0);
  auto b = horizon_query(p, c, rec, 1, 4, 365.0);
  auto d = horizon_query(p, c, rec, 1, 4, 30.0);
  CHECK(a == b);
  CHECK((a - d).cwiseAbs().maxCoeff() > 0.0);
  CHECK(a.minCoeff() > 0.0);
  CHECK(a.maxCoeff() < 1.0);
  CHECK_THROWS_AS(horizon_query(p, c, rec, 2, 2, 30.0), DataError);
  CHECK_THROWS_AS(horizon_query(p, c, rec, 0, 2, -1.0), ConfigError);
}

TEST_CASE("rollout schedule and interval hits") {
  RolloutConfig cfg;
  cfg.horizon_days = 365;
  cfg.gap_days = 90;
  cfg.step_days = 91;
  CHECK(cfg.step_times() == std::vector<double>{91, 182, 273, 365});
  CodeSet cs{"c", {5}};
  std::vector<Trajectory> tr{{{90.0, 5}}, {{91.0, 5}}, {{365.0, 5}}, {{400.0, 5}}, {{200.0, 6}}};
  CHECK(interval_hit_fraction(tr, cs, 90, 365) == doctest::Approx(0.4));
  cfg.gap_days = 400;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("Bernoulli emitter matches its closed form") {
  RolloutConfig cfg;
  cfg.rollouts = 4000;
  cfg.horizon_days = 364;
  cfg.gap_days = 91;
  cfg.step_days = 91;
  CoinEmitter em;
  const double expected = 1.0 - std::pow(1.0 - em.p, 3);  // visits at 182, 273, 364
  const double got = rollout_risk(em, CodeSet{"c", {5}}, cfg);
  CHECK(std::abs(got - expected) < 3.0 * std::sqrt(expected * (1 - expected) / cfg.rollouts));
  CHECK(rollout_risk(em, CodeSet{"c", {5}}, cfg, 3) == rollout_risk(em, CodeSet{"c", {5}}, cfg, 3));
}

TEST_CASE("token sampling respects top-k, masks and seeds") {
  RowVec<double> z(5);
  z << 0.0, 3.0, 1.0, 2.9, -1.0;
  std::vector<char> allowed(5, 1);
  Rng rng = make_rng(1, "s");
  for (int i = 0; i < 50; ++i) CHECK(sample_token(z, 1.0, 1, rng, allowed) == 1);
  allowed[1] = 0;
  for (int i = 0; i < 50; ++i) {
    auto t = sample_token(z, 1.0, 2, rng, allowed);
    CHECK((t == 3 || t == 2));
  }
  Rng r1 = make_rng(9, "s"), r2 = make_rng(9, "s");
  for (int i = 0; i < 20; ++i) CHECK(sample_token(z, 2.0, 0, r1, allowed) == sample_token(z, 2.0, 0, r2, allowed));
  CHECK(sample_token(z, 1.0, 0, rng, std::vector<char>(5, 0)) == kPadId);
}

TEST_CASE("gap-and-event generation advances the clock") {
  auto v = fixtures::tiny_vocab();
  FixedSource src;
  src.z = RowVec<double>::Constant(static_cast<Eigen::Index>(v.size()), -50.0);
  const TokenId gap = v.id_of("GAP|q2");
  src.z(gap) = 10.0;
  RolloutConfig cfg;
  cfg.horizon_days = 1000;
  cfg.top_k = 1;
  Rng rng = make_rng(1, "e");
  EgeStats st;
  auto tr = ege_generate(src, v, cfg, rng, &st);
  CHECK(tr.empty());
  CHECK_FALSE(st.truncated);
  CHECK(static_cast<double>(src.pushed.size()) * v.gap_days(gap) <= 1000.0);
  CHECK(static_cast<double>(src.pushed.size() + 1) * v.gap_days(gap) > 1000.0);

  FixedSource ev;
  ev.z = RowVec<double>::Constant(static_cast<Eigen::Index>(v.size()), -50.0);
  ev.z(v.id_of("DX:D4")) = 10.0;
  cfg.max_tokens = 20;
  EgeStats st2;
  auto tr2 = ege_generate(ev, v, cfg, rng, &st2);
  CHECK(st2.malformed == 1);
  CHECK(st2.truncated);
  CHECK(tr2.size() == 20);
}

TEST_CASE("baseline rollouts are deterministic per window") {
  auto v = fixtures::tiny_vocab();
  auto c = fixtures::tiny_model(static_cast<int>(v.size()), 256);
  auto p = init_params<double>(c, 6);
  Rng rng = make_rng(5, "i");
  std::vector<PatientRecord> recs{fixtures::random_record(v, rng, 4, "A"), fixtures::random_record(v, rng, 3, "B")};
  std::vector<EvalExample> ex(2);
  for (std::size_t i = 0; i < 2; ++i) {
    ex[i].patient = i;
    ex[i].patient_id = recs[i].patient_id;
    ex[i].last_visit = recs[i].visits.size();
    ex[i].anchor_day = recs[i].visits.back().day;
  }
  RolloutConfig cfg;
  cfg.rollouts = 8;
  cfg.horizon_days = 182;
  cfg.gap_days = 0;
  cfg.max_tokens = 40;
  CodeSet cs{"c", {v.id_of("DX:D1"), v.id_of("DX:D2")}};
  for (auto obj : {Objective::Multiclass, Objective::Ege}) {
    auto a = score_rollout(p, c, obj, v, recs, ex, cs, cfg);
    std::vector<EvalExample> rev{ex[1], ex[0]};
    auto b = score_rollout(p, c, obj, v, recs, rev, cs, cfg);
    CHECK(a[0] == b[1]);
    CHECK(a[1] == b[0]);
    for (double s : a) CHECK((s >= 0.0 && s <= 1.0));
  }
  cfg.bernoulli_visits = true;
  auto bern = score_rollout(p, c, Objective::SeqLoss, v, recs, ex, cs, cfg);
  CHECK(bern.size() == 2);
  CHECK_THROWS_AS(score_rollout(p, c, Objective::Raven, v, recs, ex, cs, cfg), ConfigError);
}

}  // TEST_SUITE
