#include "nextvisit/tasks.hpp"

#include <algorithm>
#include <unordered_map>

namespace nextvisit {

std::string_view to_string(LabelMode m) { return m == LabelMode::Onset ? "onset" : "all_windows"; }

LabelMode label_mode_from_string(std::string_view s) {
  if (s == "onset") return LabelMode::Onset;
  if (s == "all_windows") return LabelMode::AllWindows;
  throw ConfigError("unknown task mode '" + std::string(s) + "' (onset|all_windows)");
}

TaskSpec TaskSpec::from_config(const KeyValueConfig& kv) {
  TaskSpec t;
  auto c = kv.get_string("condition");
  if (!c) throw ConfigError("task: 'condition' is required");
  t.condition = *c;
  t.horizon_days = kv.get_int("horizon_days", t.horizon_days);
  t.gap_days = kv.get_int("gap_days", t.gap_days);
  t.history_days = kv.get_int("history_days", t.history_days);
  t.stride_days = kv.get_int("stride_days", t.stride_days);
  t.mode = label_mode_from_string(kv.get_string("mode", "onset"));
  t.validate();
  return t;
}

void TaskSpec::validate() const {
  if (gap_days < 0 || gap_days >= horizon_days) throw ConfigError("task: need 0 <= gap_days < horizon_days");
  if (history_days <= 0 || stride_days <= 0) throw ConfigError("task: history_days and stride_days must be positive");
}

std::optional<int> label_window(const PatientTruth& truth, const TaskSpec& task, long t) {
  const long lo = t + task.gap_days, hi = t + task.horizon_days;
  int label = 0;
  if (task.mode == LabelMode::Onset) {
    auto it = truth.onset.find(task.condition);
    const std::optional<long> onset = it == truth.onset.end() ? std::nullopt : it->second;
    if (onset && *onset <= lo) return std::nullopt;
    label = onset && *onset <= hi ? 1 : 0;
  } else {
    auto it = truth.occurrences.find(task.condition);
    if (it != truth.occurrences.end())
      label = std::any_of(it->second.begin(), it->second.end(), [&](long d) { return d > lo && d <= hi; }) ? 1 : 0;
  }
  if (label == 0 && truth.last_day < hi) return std::nullopt;
  return label;
}

std::vector<EvalExample> build_rolling_windows(const std::vector<PatientRecord>& records,
                                               const std::vector<PatientTruth>& truth, const TaskSpec& task,
                                               CohortStats* stats) {
  task.validate();
  std::unordered_map<std::string, const PatientTruth*> by_id;
  for (const auto& t : truth) by_id.emplace(t.patient_id, &t);
  std::vector<EvalExample> out;
  for (std::size_t pi = 0; pi < records.size(); ++pi) {
    const auto& rec = records[pi];
    if (rec.visits.empty()) continue;
    auto hit = by_id.find(rec.patient_id);
    if (hit == by_id.end()) throw DataError("no truth for patient '" + rec.patient_id + "'");
    const PatientTruth& tr = *hit->second;
    long prev_anchor = -1;
    std::size_t v = 0;
    for (long end = 0; end <= rec.visits.back().day; end += task.stride_days) {
      while (v + 1 < rec.visits.size() && rec.visits[v + 1].day <= end) ++v;
      const long t = rec.visits[v].day;
      if (t == prev_anchor) continue;
      prev_anchor = t;
      auto label = label_window(tr, task, t);
      if (!label) continue;
      std::size_t first = v;
      while (first > 0 && rec.visits[first - 1].day > t - task.history_days) --first;
      EvalExample ex;
      ex.patient_id = rec.patient_id;
      ex.patient = pi;
      ex.anchor_day = t;
      ex.first_visit = first;
      ex.last_visit = v + 1;
      ex.label = *label;
      auto on = tr.onset.find(task.condition);
      if (on != tr.onset.end()) ex.onset_day = on->second;
      out.push_back(std::move(ex));
    }
  }
  if (stats) {
    stats->condition = task.condition;
    stats->horizon_days = task.horizon_days;
    stats->total = out.size();
    stats->positive = static_cast<std::size_t>(std::count_if(out.begin(), out.end(), [](const EvalExample& e) { return e.label == 1; }));
    stats->negative = stats->total - stats->positive;
  }
  return out;
}

}  // namespace nextvisit
