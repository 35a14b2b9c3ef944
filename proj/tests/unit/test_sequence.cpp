#include <doctest.h>

#include "fixtures.hpp"
#include "nextvisit/sequence.hpp"

using namespace nextvisit;

TEST_SUITE("sequence") {

TEST_CASE("flatten layout and Sep timing") {
  auto v = fixtures::tiny_vocab();
  PatientRecord r;
  r.static_tokens = {v.id_of("DEM:SEX=F")};
  r.visits = {{100, {v.id_of("DX:D0")}}, {130, {v.id_of("DX:D1"), v.id_of("RX:R1")}}};
  auto s = flatten(r, 0, 2, 75.0, 64);
  REQUIRE(s.size() == 7);
  CHECK(s.tokens[2] == kSepId);
  CHECK(s.day[0] == 0.0);
  CHECK(s.day[2] == 30.0);
  CHECK(s.day[6] == 75.0);
  CHECK(s.visit[3] == 1);
  bool cut = false;
  auto t = flatten(r, 0, 2, 75.0, 4, &cut);
  CHECK(cut);
  CHECK(t.size() == 4);
  CHECK(t.tokens.back() == kSepId);
  CHECK_THROWS_AS(flatten(r, 1, 1, 0.0, 64), DataError);
}

TEST_CASE("train windows fit the block and supervise the next visit") {
  auto v = fixtures::tiny_vocab();
  Rng rng = make_rng(2, "s");
  for (int n = 1; n < 12; ++n) {
    auto r = fixtures::random_record(v, rng, n);
    auto ws = make_train_windows(r, 24);
    std::size_t seps = 0, visits = 0;
    for (const auto& w : ws) {
      CHECK(w.seq.size() <= 24);
      for (const auto& s : w.seps) {
        CHECK(w.seq.tokens[static_cast<std::size_t>(s.position)] == kSepId);
        CHECK(s.positives.size() == s.counts.size());
      }
      seps += w.seps.size();
      visits += static_cast<std::size_t>(w.seq.visit.back() + 1);
    }
    CHECK(visits == r.visits.size());
    CHECK(seps == r.visits.size() - 1);
  }
}

TEST_CASE("recurrence counts look back over the visible window") {
  auto v = fixtures::tiny_vocab();
  const TokenId a = v.id_of("DX:D0"), b = v.id_of("DX:D1");
  PatientRecord r;
  r.visits = {{0, {a}}, {5, {a, b}}, {9, {a, b}}, {20, {a}}};
  auto ws = make_train_windows(r, 64);
  REQUIRE(ws.size() == 1);
  const auto& s = ws[0].seps;
  REQUIRE(s.size() == 3);
  CHECK(s[0].counts == std::vector<int>{1, 0});
  CHECK(s[1].counts == std::vector<int>{2, 1});
  CHECK(s[2].counts == std::vector<int>{3});
}

TEST_CASE("packing keeps windows apart by rank") {
  auto v = fixtures::tiny_vocab();
  Rng rng = make_rng(3, "s");
  std::vector<TrainWindow> ws;
  for (int i = 0; i < 6; ++i) {
    auto r = fixtures::random_record(v, rng, 2);
    for (auto& w : make_train_windows(r, 32)) ws.push_back(w);
  }
  auto rows = pack_windows(ws, 48);
  std::size_t total_windows = 0;
  for (const auto& row : rows) {
    CHECK(row.seq.size() <= 48);
    CHECK(row.seq.rank.front() == 0);
    CHECK(row.seq.rank.back() == row.n_windows - 1);
    for (const auto& s : row.seps) CHECK(row.seq.tokens[static_cast<std::size_t>(s.position)] == kSepId);
    total_windows += static_cast<std::size_t>(row.n_windows);
  }
  CHECK(total_windows == ws.size());
}

TEST_CASE("baseline streams use the canonical order with gap tokens") {
  auto v = fixtures::tiny_vocab();
  PatientRecord r;
  r.static_tokens = {v.id_of("DEM:SEX=M")};
  r.visits = {{0, {v.id_of("RX:R1"), v.id_of("DX:D3"), v.id_of("AGE|q0")}}, {45, {v.id_of("DX:D0")}}};
  auto s = baseline_stream(r, 0, 2, v);
  REQUIRE(s.size() == 5 + 1 + 3);
  CHECK(v.concept_of(s.tokens[0]) == "DEM:SEX=M");
  CHECK(v.concept_of(s.tokens[1]) == "AGE|q0");
  CHECK(v.concept_of(s.tokens[2]) == "DX:D3");
  CHECK(v.concept_of(s.tokens[3]) == "RX:R1");
  CHECK(s.tokens[4] == kSepId);
  CHECK(v.class_of(s.tokens[5]) == TokenClass::Gap);

  auto mc = make_baseline_sequences(r, v, Objective::Multiclass, 64);
  REQUIRE(mc.size() == 1);
  CHECK(mc[0].denom == 7.0);  // the gap token is never a target
  auto sl = make_baseline_sequences(r, v, Objective::SeqLoss, 64);
  CHECK(sl[0].denom == 2.0);
  double mass = 0.0;
  for (auto [t, w] : sl[0].targets[0]) mass += w;
  CHECK(mass == doctest::Approx(1.0));
  CHECK_THROWS_AS(make_baseline_sequences(r, v, Objective::Raven, 64), ConfigError);
  CHECK_THROWS_AS(objective_from_string("gpt"), ConfigError);
}

}  // TEST_SUITE
