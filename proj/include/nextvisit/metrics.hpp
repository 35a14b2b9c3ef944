#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nextvisit/common.hpp"

namespace nextvisit {

/// Mann-Whitney concordance with half credit for ties, via midranks.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Average precision: sum over distinct thresholds (descending) of
/// (delta TP / P) * precision.
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

struct ThresholdStats {
  double threshold = 0.0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

/// Classification counts with "positive" meaning score >= threshold.
ThresholdStats stats_at(const std::vector<double>& scores, const std::vector<int>& labels, double threshold);

enum class ThresholdMode { MaxF1, PrevalenceMatched };

/// MaxF1: the distinct score maximising F1, ties to the higher threshold.
/// PrevalenceMatched: ascending sorted[floor((1 - prevalence) * n)], with the
/// prevalence of `labels` unless given.
ThresholdStats select_threshold(const std::vector<double>& scores, const std::vector<int>& labels,
                                ThresholdMode mode = ThresholdMode::MaxF1,
                                std::optional<double> prevalence = std::nullopt);

using MetricFn = std::function<double(const std::vector<double>&, const std::vector<int>&)>;

/// Resample indices for one bootstrap draw: positives and negatives drawn
/// separately with replacement, keeping both class counts.
std::vector<std::size_t> stratified_resample(const std::vector<int>& labels, Rng& rng);

struct BootstrapCI {
  double lo = 0.0, hi = 0.0;
  std::vector<double> samples;
};

/// Percentile interval (linear interpolation) over `n` stratified resamples;
/// resample b uses the seed stream ("bootstrap", b).
BootstrapCI stratified_bootstrap_ci(const MetricFn& metric, const std::vector<double>& scores,
                                    const std::vector<int>& labels, int n = 1000, double level = 0.95,
                                    std::uint64_t seed = 0);

/// Linear-interpolated percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

struct WindowPrediction {
  std::string patient_id;
  long anchor_day = 0;
  double score = 0.0;
};

struct OnTimeResult {
  std::size_t numerator = 0;     // first flag at or before onset
  std::size_t flagged = 0;       // eventually-positive patients flagged at all
  std::size_t denominator = 0;   // eventually-positive, onset after first visit
  double ratio = 0.0;
};

/// Over each patient's windows, the first anchor with score >= threshold is
/// compared with the documented onset. Patients with onset at their first
/// visit are excluded; only patients with at least one prediction count.
OnTimeResult on_time_ratio(const std::vector<WindowPrediction>& predictions, double threshold,
                           const std::map<std::string, std::optional<long>>& onset,
                           const std::map<std::string, long>& first_day);

}  // namespace nextvisit
