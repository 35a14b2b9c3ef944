#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nextvisit/config.hpp"
#include "nextvisit/records.hpp"

namespace nextvisit {

/// Onset: windows with onset at or before the anchor, or inside the gap, are
/// dropped; label = first onset in (t+G, t+H].
/// AllWindows: no exclusions; label = any code-set occurrence in (t+G, t+H].
enum class LabelMode { Onset, AllWindows };

std::string_view to_string(LabelMode m);
LabelMode label_mode_from_string(std::string_view s);

struct TaskSpec {
  std::string condition;
  long horizon_days = 730;
  long gap_days = 365;
  long history_days = 365;
  long stride_days = 90;
  LabelMode mode = LabelMode::Onset;

  // Task file keys: condition, horizon_days, gap_days, history_days,
  // stride_days, mode ("onset" | "all_windows").
  static TaskSpec from_config(const KeyValueConfig& kv);
  void validate() const;
};

struct EvalExample {
  std::string patient_id;
  std::size_t patient = 0;      // index into the dataset
  long anchor_day = 0;          // t: last visit day in the history window
  std::size_t first_visit = 0;  // history visits [first_visit, last_visit)
  std::size_t last_visit = 0;
  int label = 0;
  std::optional<long> onset_day;
};

struct CohortStats {
  std::string condition;
  long horizon_days = 0;
  std::size_t total = 0, positive = 0, negative = 0;
  double prevalence() const { return total == 0 ? 0.0 : static_cast<double>(positive) / static_cast<double>(total); }
};

/// Label of the window anchored at `t`, or nullopt when the window is
/// excluded (prior onset, onset inside the gap, or right-censored).
std::optional<int> label_window(const PatientTruth& truth, const TaskSpec& task, long t);

/// Window ends advance by the stride from day 0; each end anchors at the last
/// visit on or before it (duplicate anchors collapse). The history is the
/// visits in (t - history_days, t].
std::vector<EvalExample> build_rolling_windows(const std::vector<PatientRecord>& records,
                                               const std::vector<PatientTruth>& truth, const TaskSpec& task,
                                               CohortStats* stats = nullptr);

}  // namespace nextvisit
