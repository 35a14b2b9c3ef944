#include <doctest.h>

#include <cmath>

#include "nextvisit/io.hpp"
#include "nextvisit/report.hpp"

using namespace nextvisit;

namespace {

std::vector<ScoreRow> grid_rows() {
  std::vector<ScoreRow> rows;
  Rng rng = make_rng(1, "rep");
  for (const char* c : {"A", "B"})
    for (long h : {365L, 730L})
      for (int i = 0; i < 40; ++i) {
        ScoreRow r;
        r.patient_id = "P" + std::to_string(i % 10);
        r.anchor_day = 90L * (i / 10);
        r.condition = c;
        r.horizon_days = h;
        r.label = i % 4 == 0 ? 1 : 0;
        if (r.label) r.onset_day = r.anchor_day + 100;
        r.score = 0.3 * r.label + uniform01(rng);
        rows.push_back(r);
      }
  return rows;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("scores csv round trip") {
  auto rows = grid_rows();
  auto text = scores_to_csv(rows);
  CHECK(text.rfind("patient_id,anchor_day,condition,horizon_days,label,onset_day,first_day,score\n", 0) == 0);
  auto back = parse_scores_csv(text);
  REQUIRE(back.size() == rows.size());
  CHECK(back[0].onset_day == rows[0].onset_day);
  CHECK_FALSE(back[1].onset_day.has_value());
  CHECK(scores_to_csv(back) == text);
  CHECK_THROWS_AS(parse_scores_csv("a,b\n1,2\n"), DataError);
}

TEST_CASE("one metric row per condition and horizon plus macro rows") {
  EvalOptions opt;
  opt.bootstrap = 50;
  auto m = evaluate_scores(grid_rows(), opt);
  REQUIRE(m.size() == 4);
  CHECK(m[0].condition == "A");
  CHECK(m[1].horizon_days == 730);
  for (const auto& r : m) {
    CHECK(r.n == 40);
    CHECK(r.positives == 10);
    CHECK(r.prevalence == 0.25);
    CHECK(r.auroc_lo <= r.auroc);
    CHECK(r.auroc <= r.auroc_hi);
    CHECK(r.auprc_lo <= r.auprc_hi);
  }
  auto full = with_macro_average(m);
  REQUIRE(full.size() == 6);
  CHECK(full[4].condition == kMacroAverage);
  CHECK(full[4].n == 80);
  CHECK(full[4].auroc == doctest::Approx((m[0].auroc + m[2].auroc) / 2.0));

  auto csv = metrics_to_csv(full);
  CHECK(csv.rfind("condition,horizon_days,n,positives,prevalence,auroc,auroc_lo,auroc_hi,auprc,auprc_lo,auprc_hi,"
                  "threshold,precision,recall,f1,on_time_ratio\n",
                  0) == 0);
  auto back = parse_metrics_csv(csv);
  REQUIRE(back.size() == 6);
  CHECK(back[2].auroc == doctest::Approx(full[2].auroc).epsilon(1e-9));
}

TEST_CASE("evaluation is deterministic and rejects bad scores") {
  EvalOptions opt;
  opt.bootstrap = 30;
  opt.seed = 4;
  CHECK(metrics_to_csv(evaluate_scores(grid_rows(), opt)) == metrics_to_csv(evaluate_scores(grid_rows(), opt)));
  opt.bootstrap = 0;
  auto m = evaluate_scores(grid_rows(), opt);
  CHECK(std::isnan(m[0].auroc_lo));
  auto bad = grid_rows();
  bad[3].score = std::nan("");
  CHECK_THROWS_AS(evaluate_scores(bad, opt), NumericError);
  CHECK(threshold_mode_from_string("prevalence") == ThresholdMode::PrevalenceMatched);
  CHECK_THROWS_AS(threshold_mode_from_string("youden"), ConfigError);
}

}  // TEST_SUITE
