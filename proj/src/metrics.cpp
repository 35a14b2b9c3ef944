#include "nextvisit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nextvisit {

namespace {

void check_inputs(const std::vector<double>& scores, const std::vector<int>& labels, bool need_negative) {
  if (scores.size() != labels.size()) throw ConfigError("scores and labels differ in length");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
    pos += static_cast<std::size_t>(l);
  }
  if (pos == 0) throw UndefinedMetricError("metric undefined: no positive examples");
  if (need_negative && pos == labels.size()) throw UndefinedMetricError("metric undefined: no negative examples");
}

std::vector<std::size_t> order_desc(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_inputs(scores, labels, true);
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]] == 1) {
        rank_sum += mid;
        ++n_pos;
      }
    i = j;
  }
  const double p = static_cast<double>(n_pos), q = static_cast<double>(n - n_pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_inputs(scores, labels, false);
  const auto idx = order_desc(scores);
  double total_pos = 0.0;
  for (int l : labels) total_pos += l;
  double ap = 0.0, tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    double dtp = 0.0;
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      if (labels[idx[j]] == 1) dtp += 1.0; else fp += 1.0;
      ++j;
    }
    tp += dtp;
    if (dtp > 0.0) ap += dtp * (tp / (tp + fp));
    i = j;
  }
  return ap / total_pos;
}

ThresholdStats stats_at(const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
  if (scores.size() != labels.size()) throw ConfigError("scores and labels differ in length");
  ThresholdStats s;
  s.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred && labels[i] == 1) ++s.tp;
    else if (pred) ++s.fp;
    else if (labels[i] == 1) ++s.fn;
  }
  const double tp = static_cast<double>(s.tp);
  s.precision = s.tp + s.fp == 0 ? 0.0 : tp / static_cast<double>(s.tp + s.fp);
  s.recall = s.tp + s.fn == 0 ? 0.0 : tp / static_cast<double>(s.tp + s.fn);
  s.f1 = s.tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + static_cast<double>(s.fp + s.fn));
  return s;
}

ThresholdStats select_threshold(const std::vector<double>& scores, const std::vector<int>& labels, ThresholdMode mode,
                                std::optional<double> prevalence) {
  check_inputs(scores, labels, true);
  if (mode == ThresholdMode::PrevalenceMatched) {
    double prev = 0.0;
    if (prevalence) {
      prev = *prevalence;
    } else {
      for (int l : labels) prev += l;
      prev /= static_cast<double>(labels.size());
    }
    std::vector<double> sorted(scores);
    std::sort(sorted.begin(), sorted.end());
    const auto k = std::min(sorted.size() - 1, static_cast<std::size_t>(std::floor((1.0 - prev) * static_cast<double>(sorted.size()))));
    return stats_at(scores, labels, sorted[k]);
  }
  // Sweep distinct thresholds from high to low; F1 = 2TP / (2TP + FP + FN).
  const auto idx = order_desc(scores);
  double total_pos = 0.0;
  for (int l : labels) total_pos += l;
  double tp = 0.0, fp = 0.0, best_f1 = -1.0, best_t = scores[idx[0]];
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      if (labels[idx[j]] == 1) tp += 1.0; else fp += 1.0;
      ++j;
    }
    const double f1 = tp == 0.0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + (total_pos - tp));
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = scores[idx[i]];
    }
    i = j;
  }
  return stats_at(scores, labels, best_t);
}

std::vector<std::size_t> stratified_resample(const std::vector<int>& labels, Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto* cls : {&pos, &neg})
    for (std::size_t k = 0; k < cls->size(); ++k)
      out.push_back((*cls)[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(cls->size()))]);
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw UndefinedMetricError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(values.size() - 1, lo + 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapCI stratified_bootstrap_ci(const MetricFn& metric, const std::vector<double>& scores,
                                    const std::vector<int>& labels, int n, double level, std::uint64_t seed) {
  check_inputs(scores, labels, true);
  if (n < 1 || !(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap: need n >= 1 and level in (0, 1)");
  BootstrapCI ci;
  ci.samples.reserve(static_cast<std::size_t>(n));
  std::vector<double> s(scores.size());
  std::vector<int> l(labels.size());
  for (int b = 0; b < n; ++b) {
    Rng rng = make_rng(seed, "bootstrap", static_cast<std::uint64_t>(b));
    const auto idx = stratified_resample(labels, rng);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      s[i] = scores[idx[i]];
      l[i] = labels[idx[i]];
    }
    ci.samples.push_back(metric(s, l));
  }
  const double alpha = 1.0 - level;
  ci.lo = percentile(ci.samples, alpha / 2.0);
  ci.hi = percentile(ci.samples, 1.0 - alpha / 2.0);
  return ci;
}

OnTimeResult on_time_ratio(const std::vector<WindowPrediction>& predictions, double threshold,
                           const std::map<std::string, std::optional<long>>& onset,
                           const std::map<std::string, long>& first_day) {
  std::map<std::string, std::optional<long>> first_flag;
  for (const auto& p : predictions) {
    auto& f = first_flag[p.patient_id];
    if (p.score >= threshold && (!f || p.anchor_day < *f)) f = p.anchor_day;
  }
  OnTimeResult r;
  for (const auto& [pid, flag] : first_flag) {
    auto on = onset.find(pid);
    if (on == onset.end() || !on->second) continue;
    auto fd = first_day.find(pid);
    const long first = fd == first_day.end() ? 0 : fd->second;
    if (*on->second <= first) continue;
    ++r.denominator;
    if (!flag) continue;
    ++r.flagged;
    if (*flag <= *on->second) ++r.numerator;
  }
  if (r.denominator == 0) throw UndefinedMetricError("on-time ratio undefined: no eventually-positive patients");
  r.ratio = static_cast<double>(r.numerator) / static_cast<double>(r.denominator);
  return r;
}

}  // namespace nextvisit
