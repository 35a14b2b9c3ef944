#include "nextvisit/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "nextvisit/io.hpp"

namespace nextvisit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* kScoresHeader = "patient_id,anchor_day,condition,horizon_days,label,onset_day,first_day,score";
const char* kMetricsHeader =
    "condition,horizon_days,n,positives,prevalence,auroc,auroc_lo,auroc_hi,auprc,auprc_lo,auprc_hi,"
    "threshold,precision,recall,f1,on_time_ratio";

std::vector<std::vector<std::string>> csv_rows(const std::string& text, const char* header, std::size_t width,
                                               const char* what) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) throw DataError(std::string(what) + ": unexpected header");
  std::vector<std::vector<std::string>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != width) throw DataError(std::string(what) + ": malformed row '" + line + "'");
    out.push_back(std::move(f));
  }
  return out;
}

double parse_num(const std::string& s) {
  if (s == "nan" || s == "-nan") return kNaN;
  return std::stod(s);
}

}  // namespace

std::vector<ScoreRow> make_score_rows(const std::vector<EvalExample>& examples, const std::vector<double>& scores,
                                      const TaskSpec& task, const std::vector<PatientTruth>& truth) {
  if (examples.size() != scores.size()) throw ConfigError("examples and scores differ in length");
  std::unordered_map<std::string, long> first;
  for (const auto& t : truth) first.emplace(t.patient_id, t.first_day);
  std::vector<ScoreRow> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    ScoreRow r;
    r.patient_id = e.patient_id;
    r.anchor_day = e.anchor_day;
    r.condition = task.condition;
    r.horizon_days = task.horizon_days;
    r.label = e.label;
    r.onset_day = e.onset_day;
    auto f = first.find(e.patient_id);
    r.first_day = f == first.end() ? 0 : f->second;
    r.score = scores[i];
    out.push_back(std::move(r));
  }
  return out;
}

std::string scores_to_csv(const std::vector<ScoreRow>& rows) {
  std::string out = std::string(kScoresHeader) + "\n";
  for (const auto& r : rows) {
    out += r.patient_id + "," + std::to_string(r.anchor_day) + "," + r.condition + "," +
           std::to_string(r.horizon_days) + "," + std::to_string(r.label) + "," +
           (r.onset_day ? std::to_string(*r.onset_day) : std::string()) + "," + std::to_string(r.first_day) + "," +
           format_number(r.score) + "\n";
  }
  return out;
}

std::vector<ScoreRow> parse_scores_csv(const std::string& text) {
  std::vector<ScoreRow> out;
  for (auto& f : csv_rows(text, kScoresHeader, 8, "scores")) {
    ScoreRow r;
    try {
      r.patient_id = f[0];
      r.anchor_day = std::stol(f[1]);
      r.condition = f[2];
      r.horizon_days = std::stol(f[3]);
      r.label = std::stoi(f[4]);
      if (!f[5].empty()) r.onset_day = std::stol(f[5]);
      r.first_day = std::stol(f[6]);
      r.score = parse_num(f[7]);
    } catch (const std::logic_error&) {
      throw DataError("scores: malformed number in row for '" + f[0] + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

ThresholdMode threshold_mode_from_string(std::string_view s) {
  if (s == "max_f1") return ThresholdMode::MaxF1;
  if (s == "prevalence") return ThresholdMode::PrevalenceMatched;
  throw ConfigError("unknown threshold mode '" + std::string(s) + "'");
}

std::vector<MetricRow> evaluate_scores(const std::vector<ScoreRow>& rows, const EvalOptions& opt) {
  std::vector<std::pair<std::string, long>> order;
  std::map<std::pair<std::string, long>, std::vector<const ScoreRow*>> groups;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.condition, r.horizon_days);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<MetricRow> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    std::vector<double> s;
    std::vector<int> l;
    std::vector<WindowPrediction> preds;
    std::map<std::string, std::optional<long>> onset;
    std::map<std::string, long> first;
    for (const auto* r : g) {
      if (!std::isfinite(r->score)) throw NumericError("non-finite score for patient '" + r->patient_id + "'");
      s.push_back(r->score);
      l.push_back(r->label);
      preds.push_back({r->patient_id, r->anchor_day, r->score});
      onset[r->patient_id] = r->onset_day;
      first[r->patient_id] = r->first_day;
    }
    MetricRow m;
    m.condition = key.first;
    m.horizon_days = key.second;
    m.n = g.size();
    for (int v : l) m.positives += static_cast<std::size_t>(v);
    m.prevalence = static_cast<double>(m.positives) / static_cast<double>(m.n);
    m.auroc = auroc(s, l);
    m.auprc = auprc(s, l);
    m.auroc_lo = m.auroc_hi = m.auprc_lo = m.auprc_hi = kNaN;
    if (opt.bootstrap > 0) {
      auto a = stratified_bootstrap_ci(auroc, s, l, opt.bootstrap, opt.level, opt.seed);
      auto p = stratified_bootstrap_ci(auprc, s, l, opt.bootstrap, opt.level, opt.seed);
      m.auroc_lo = a.lo;
      m.auroc_hi = a.hi;
      m.auprc_lo = p.lo;
      m.auprc_hi = p.hi;
    }
    const auto th = select_threshold(s, l, opt.threshold);
    m.threshold = th.threshold;
    m.precision = th.precision;
    m.recall = th.recall;
    m.f1 = th.f1;
    try {
      m.on_time_ratio = on_time_ratio(preds, th.threshold, onset, first).ratio;
    } catch (const UndefinedMetricError&) {
      m.on_time_ratio = kNaN;
    }
    out.push_back(m);
  }
  return out;
}

std::string metrics_to_csv(const std::vector<MetricRow>& rows) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& m : rows) {
    out += m.condition + "," + std::to_string(m.horizon_days) + "," + std::to_string(m.n) + "," +
           std::to_string(m.positives);
    for (double v : {m.prevalence, m.auroc, m.auroc_lo, m.auroc_hi, m.auprc, m.auprc_lo, m.auprc_hi, m.threshold,
                     m.precision, m.recall, m.f1, m.on_time_ratio})
      out += "," + format_number(v);
    out += "\n";
  }
  return out;
}

std::vector<MetricRow> parse_metrics_csv(const std::string& text) {
  std::vector<MetricRow> out;
  for (auto& f : csv_rows(text, kMetricsHeader, 16, "metrics")) {
    MetricRow m;
    try {
      m.condition = f[0];
      m.horizon_days = std::stol(f[1]);
      m.n = std::stoull(f[2]);
      m.positives = std::stoull(f[3]);
      double* dst[] = {&m.prevalence, &m.auroc, &m.auroc_lo, &m.auroc_hi, &m.auprc, &m.auprc_lo,
                       &m.auprc_hi,   &m.threshold, &m.precision, &m.recall, &m.f1, &m.on_time_ratio};
      for (std::size_t i = 0; i < 12; ++i) *dst[i] = parse_num(f[4 + i]);
    } catch (const std::logic_error&) {
      throw DataError("metrics: malformed number in row for '" + f[0] + "'");
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<MetricRow> with_macro_average(std::vector<MetricRow> rows) {
  std::vector<long> horizons;
  for (const auto& r : rows)
    if (r.condition != kMacroAverage && std::find(horizons.begin(), horizons.end(), r.horizon_days) == horizons.end())
      horizons.push_back(r.horizon_days);
  const std::size_t n_rows = rows.size();
  for (long h : horizons) {
    MetricRow avg;
    avg.condition = kMacroAverage;
    avg.horizon_days = h;
    double k = 0.0;
    auto fields = [](MetricRow& m) {
      return std::vector<double*>{&m.prevalence, &m.auroc, &m.auroc_lo, &m.auroc_hi, &m.auprc, &m.auprc_lo,
                                  &m.auprc_hi,   &m.threshold, &m.precision, &m.recall, &m.f1, &m.on_time_ratio};
    };
    auto acc = fields(avg);
    for (std::size_t i = 0; i < n_rows; ++i) {
      auto& r = rows[i];
      if (r.condition == kMacroAverage || r.horizon_days != h) continue;
      k += 1.0;
      avg.n += r.n;
      avg.positives += r.positives;
      auto src = fields(r);
      for (std::size_t j = 0; j < acc.size(); ++j) *acc[j] += *src[j];
    }
    for (auto* v : acc) *v /= k;
    rows.push_back(avg);
  }
  return rows;
}

}  // namespace nextvisit
