#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nextvisit/metrics.hpp"
#include "nextvisit/records.hpp"
#include "nextvisit/tasks.hpp"

namespace nextvisit {

/// One scored evaluation window. Single-pass and rollout scorers emit the
/// same schema so both go through one evaluation path.
struct ScoreRow {
  std::string patient_id;
  long anchor_day = 0;
  std::string condition;
  long horizon_days = 0;
  int label = 0;
  std::optional<long> onset_day;
  long first_day = 0;
  double score = 0.0;
};

std::vector<ScoreRow> make_score_rows(const std::vector<EvalExample>& examples, const std::vector<double>& scores,
                                      const TaskSpec& task, const std::vector<PatientTruth>& truth);
std::string scores_to_csv(const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> parse_scores_csv(const std::string& text);

struct EvalOptions {
  int bootstrap = 1000;  // 0 disables the intervals
  double level = 0.95;
  ThresholdMode threshold = ThresholdMode::MaxF1;
  std::uint64_t seed = 0;
};

ThresholdMode threshold_mode_from_string(std::string_view s);  // "max_f1" | "prevalence"

struct MetricRow {
  std::string condition;
  long horizon_days = 0;
  std::size_t n = 0, positives = 0;
  double prevalence = 0.0;
  double auroc = 0.0, auroc_lo = 0.0, auroc_hi = 0.0;
  double auprc = 0.0, auprc_lo = 0.0, auprc_hi = 0.0;
  double threshold = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  double on_time_ratio = 0.0;  // NaN when undefined
};

/// Metrics per (condition, horizon) group, in first-appearance order.
std::vector<MetricRow> evaluate_scores(const std::vector<ScoreRow>& rows, const EvalOptions& opt);

std::string metrics_to_csv(const std::vector<MetricRow>& rows);
std::vector<MetricRow> parse_metrics_csv(const std::string& text);

inline const char* kMacroAverage = "Macro average";

/// Appends one "Macro average" row per horizon: the unweighted mean of each
/// metric column over that horizon's conditions (counts are summed).
std::vector<MetricRow> with_macro_average(std::vector<MetricRow> rows);

}  // namespace nextvisit
