#include <doctest.h>

#include "fixtures.hpp"
#include "nextvisit/tasks.hpp"

using namespace nextvisit;

namespace {

PatientTruth truth(std::optional<long> onset, std::vector<long> occ, long last) {
  PatientTruth t;
  t.patient_id = "A";
  t.last_day = last;
  t.onset["c"] = onset;
  t.occurrences["c"] = std::move(occ);
  return t;
}

TaskSpec task(long h, long g, LabelMode m = LabelMode::Onset) {
  TaskSpec t;
  t.condition = "c";
  t.horizon_days = h;
  t.gap_days = g;
  t.mode = m;
  return t;
}

}  // namespace

TEST_SUITE("tasks") {

TEST_CASE("onset label rules") {
  const auto tk = task(100, 30);
  CHECK(label_window(truth(std::nullopt, {}, 500), tk, 0) == 0);
  CHECK(label_window(truth(50, {50}, 500), tk, 0) == 1);
  CHECK(label_window(truth(150, {150}, 500), tk, 0) == 0);
  CHECK(label_window(truth(100, {100}, 500), tk, 0) == 1);   // closed at t+H
  CHECK(label_window(truth(30, {30}, 500), tk, 0) == std::nullopt);  // open at t+G
  CHECK(label_window(truth(10, {10}, 500), tk, 20) == std::nullopt);  // prior onset
  CHECK(label_window(truth(std::nullopt, {}, 80), tk, 0) == std::nullopt);  // censored negative
  CHECK(label_window(truth(60, {60}, 80), tk, 0) == 1);  // observed positive survives censoring
}

TEST_CASE("all-window labels count recurrences") {
  const auto tk = task(100, 30, LabelMode::AllWindows);
  CHECK(label_window(truth(10, {10, 70}, 500), tk, 20) == 1);
  CHECK(label_window(truth(10, {10, 40}, 500), tk, 20) == 0);
  CHECK(label_window(truth(10, {10, 200}, 500), tk, 20) == 0);
}

TEST_CASE("rolling windows anchor at the last visit before each stride end") {
  auto v = fixtures::tiny_vocab();
  PatientRecord r;
  r.patient_id = "A";
  for (long d : {0L, 20L, 95L, 250L, 400L, 900L}) r.visits.push_back({d, {v.id_of("DX:D0")}});
  TaskSpec tk = task(300, 0);
  tk.stride_days = 100;
  tk.history_days = 200;
  CohortStats st;
  auto ex = build_rolling_windows({r}, {truth(std::nullopt, {}, 900)}, tk, &st);
  std::vector<long> anchors;
  for (const auto& e : ex) anchors.push_back(e.anchor_day);
  CHECK(anchors == std::vector<long>{0, 95, 250, 400});
  CHECK(ex[1].first_visit == 0);
  CHECK(ex[1].last_visit == 3);
  CHECK(ex[2].first_visit == 2);
  CHECK(st.total == 4);
  CHECK(st.positive == 0);
  CHECK_THROWS_AS(build_rolling_windows({r}, {}, tk), DataError);
}

TEST_CASE("task config") {
  auto t = TaskSpec::from_config(KeyValueConfig::parse("condition = \"x\"\nhorizon_days = 90\ngap_days = 0\nmode = \"all_windows\"\n"));
  CHECK(t.mode == LabelMode::AllWindows);
  CHECK_THROWS_AS(TaskSpec::from_config(KeyValueConfig::parse("horizon_days = 90\n")), ConfigError);
  CHECK_THROWS_AS(TaskSpec::from_config(KeyValueConfig::parse("condition = \"x\"\nhorizon_days = 90\ngap_days = 90\n")), ConfigError);
}

}  // TEST_SUITE
