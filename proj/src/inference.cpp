#include "nextvisit/inference.hpp"

namespace nextvisit {

Pooling pooling_from_string(std::string_view s) {
  if (s == "sum_logits") return Pooling::SumLogits;
  if (s == "noisy_or") return Pooling::NoisyOr;
  throw ConfigError("unknown pooling method '" + std::string(s) + "' (sum_logits|noisy_or)");
}

std::string_view to_string(Pooling p) { return p == Pooling::SumLogits ? "sum_logits" : "noisy_or"; }

void RolloutConfig::validate() const {
  if (rollouts < 1) throw ConfigError("rollouts: R must be >= 1");
  if (!(step_days > 0.0)) throw ConfigError("rollouts: step must be positive");
  if (!(gap_days >= 0.0 && gap_days < horizon_days)) throw ConfigError("rollouts: need 0 <= gap < horizon");
  if (max_tokens < 0 || max_visit_events < 1) throw ConfigError("rollouts: token budgets out of range");
  if (!(temperature > 0.0)) throw ConfigError("rollouts: temperature must be positive");
}

std::vector<double> RolloutConfig::step_times() const {
  const int n = std::max(1, static_cast<int>(std::lround(horizon_days / step_days)));
  std::vector<double> t;
  for (int k = 1; k <= n; ++k) t.push_back(k == n ? horizon_days : std::min(horizon_days, k * step_days));
  return t;
}

double interval_hit_fraction(const std::vector<Trajectory>& trajectories, const CodeSet& cs, double gap_days,
                             double horizon_days) {
  if (trajectories.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& tr : trajectories)
    if (std::any_of(tr.begin(), tr.end(), [&](const SimEvent& e) {
          return e.time > gap_days && e.time <= horizon_days && cs.contains(e.token);
        }))
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(trajectories.size());
}

}  // namespace nextvisit
