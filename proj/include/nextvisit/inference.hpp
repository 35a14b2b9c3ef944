#pragma once

#include <algorithm>
#include <cmath>
#include <string_view>
#include <vector>

#include "nextvisit/losses.hpp"
#include "nextvisit/model.hpp"
#include "nextvisit/records.hpp"
#include "nextvisit/sequence.hpp"

namespace nextvisit {

enum class Pooling { SumLogits, NoisyOr };

Pooling pooling_from_string(std::string_view s);  // "sum_logits" | "noisy_or"
std::string_view to_string(Pooling p);

/// sum_logits: sigmoid(sum of code-set logits); noisy_or: 1 - prod(1 - p_k).
template <class Derived>
double pool_code_set(const Eigen::MatrixBase<Derived>& logits, const CodeSet& cs, Pooling method) {
  if (cs.tokens.empty()) throw ConfigError("pool_code_set: empty code set");
  if (method == Pooling::SumLogits) {
    double z = 0.0;
    for (auto t : cs.tokens) z += static_cast<double>(logits(t));
    return detail::sigmoid(z);
  }
  double miss = 1.0;
  for (auto t : cs.tokens) miss *= 1.0 - detail::sigmoid(static_cast<double>(logits(t)));
  return 1.0 - miss;
}

/// Logits at a Sep placed at day t + H after history visits [first, last)
/// (t = day of the last history visit). Pure in (params, window, H).
template <class S>
RowVec<S> horizon_query_logits(const ModelParams<S>& p, const ModelConfig& c, const PatientRecord& record,
                               std::size_t first, std::size_t last, double horizon_days) {
  if (first >= last) throw DataError("horizon_query: empty history");
  if (!(horizon_days >= 0.0)) throw ConfigError("horizon_query: horizon must be non-negative");
  const double t = static_cast<double>(record.visits[last - 1].day - record.visits[first].day);
  FlatSequence seq = flatten(record, first, last, t + horizon_days, static_cast<std::size_t>(c.block_size));
  Mat<S> hidden = forward_hidden(p, c, seq);
  return logits_at(p, hidden, {static_cast<int>(seq.size()) - 1}).row(0);
}

template <class S>
RowVec<S> horizon_query(const ModelParams<S>& p, const ModelConfig& c, const PatientRecord& record, std::size_t first,
                        std::size_t last, double horizon_days) {
  RowVec<S> z = horizon_query_logits(p, c, record, first, last, horizon_days);
  return z.unaryExpr([](S v) { return detail::sigmoid(v); });
}

// ---------------------------------------------------------------------------
// Rollouts

struct RolloutConfig {
  int rollouts = 100;
  double step_days = 91.0;
  double horizon_days = 730.0;
  double gap_days = 365.0;
  int max_tokens = 512;        // token budget per EGE rollout
  double temperature = 1.0;
  int top_k = 50;
  int max_visit_events = 32;   // per simulated visit (multiclass / seqloss)
  bool bernoulli_visits = false;
  int bernoulli_top_k = 16;
  std::uint64_t seed = 0;

  void validate() const;
  /// Simulated visit offsets after the anchor: k * step for k < n, the last
  /// one clamped to the horizon, n = max(1, round(H / step)).
  std::vector<double> step_times() const;
};

struct SimEvent {
  double time = 0.0;  // days after the anchor
  TokenId token = kPadId;
};
using Trajectory = std::vector<SimEvent>;

/// Fraction of trajectories with a code-set token in (gap, horizon].
double interval_hit_fraction(const std::vector<Trajectory>& trajectories, const CodeSet& cs, double gap_days,
                             double horizon_days);

/// Discrete-time rollouts. `Emitter` is copyable and provides
///   std::vector<TokenId> next_visit(double gap_days, Rng&)
/// Each rollout starts from a copy of `proto` with its own derived seed.
template <class Emitter>
std::vector<Trajectory> simulate_visits(const Emitter& proto, const RolloutConfig& cfg, std::uint64_t stream = 0) {
  cfg.validate();
  const auto times = cfg.step_times();
  std::vector<Trajectory> out(static_cast<std::size_t>(cfg.rollouts));
  for (int r = 0; r < cfg.rollouts; ++r) {
    Emitter em = proto;
    Rng rng = make_rng(cfg.seed, "rollout", stream * 1000003ULL + static_cast<std::uint64_t>(r));
    double prev = 0.0;
    for (double t : times) {
      for (auto tok : em.next_visit(t - prev, rng)) out[static_cast<std::size_t>(r)].push_back({t, tok});
      prev = t;
    }
  }
  return out;
}

template <class Emitter>
double rollout_risk(const Emitter& proto, const CodeSet& cs, const RolloutConfig& cfg, std::uint64_t stream = 0) {
  return interval_hit_fraction(simulate_visits(proto, cfg, stream), cs, cfg.gap_days, cfg.horizon_days);
}

/// Draws from softmax(logits / temperature) restricted to the `top_k` largest
/// allowed entries (all allowed when top_k <= 0).
template <class Derived>
TokenId sample_token(const Eigen::MatrixBase<Derived>& logits, double temperature, int top_k, Rng& rng,
                     const std::vector<char>& allowed) {
  std::vector<std::pair<double, TokenId>> cand;
  for (Eigen::Index k = 0; k < logits.size(); ++k)
    if (allowed[static_cast<std::size_t>(k)]) cand.emplace_back(static_cast<double>(logits(k)), static_cast<TokenId>(k));
  if (cand.empty()) return kPadId;
  auto cmp = [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; };
  if (top_k > 0 && static_cast<std::size_t>(top_k) < cand.size()) {
    std::partial_sort(cand.begin(), cand.begin() + top_k, cand.end(), cmp);
    cand.resize(static_cast<std::size_t>(top_k));
  } else {
    std::sort(cand.begin(), cand.end(), cmp);
  }
  const double mx = cand.front().first;
  double total = 0.0;
  for (auto& c : cand) total += (c.first = std::exp((c.first - mx) / temperature));
  double u = uniform01(rng) * total;
  for (const auto& c : cand) {
    u -= c.first;
    if (u < 0.0) return c.second;
  }
  return cand.back().second;
}

/// Next-token model state for rollouts: history prefilled into a key/value
/// cache; positions are token ordinals.
template <class S>
class DecoderSource {
 public:
  DecoderSource(const ModelParams<S>& p, const ModelConfig& c, const FlatSequence& history, int reserve)
      : dec_(p, c, static_cast<int>(history.size()) + reserve) {
    for (std::size_t i = 0; i < history.size(); ++i) logits_ = dec_.step(history.tokens[i], static_cast<double>(dec_.size()));
  }
  const RowVec<S>& logits() const { return logits_; }
  void push(TokenId t) { logits_ = dec_.step(t, static_cast<double>(dec_.size())); }

 private:
  IncrementalDecoder<S> dec_;
  RowVec<S> logits_;
};

/// Visit emitter for the multiclass / set-loss baselines: after the gap token
/// for the elapsed time, tokens are sampled until Sep (or the event cap),
/// without repeats inside a visit. With `bernoulli_visits`, each of the
/// top-k next-token candidates is instead kept with its own probability.
template <class S>
class VisitEmitter {
 public:
  VisitEmitter(DecoderSource<S> source, const Vocabulary& vocab, const RolloutConfig& cfg)
      : src_(std::move(source)), vocab_(&vocab), cfg_(&cfg), base_allowed_(vocab.size(), 1) {
    base_allowed_[kPadId] = 0;
    for (auto g : vocab.ids_of_class(TokenClass::Gap)) base_allowed_[static_cast<std::size_t>(g)] = 0;
  }

  std::vector<TokenId> next_visit(double gap_days, Rng& rng) {
    if (auto g = vocab_->gap_token_for(gap_days)) src_.push(*g);
    std::vector<TokenId> events;
    if (cfg_->bernoulli_visits) {
      auto allowed = base_allowed_;
      allowed[kSepId] = 0;
      const RowVec<S>& z = src_.logits();
      const double mx = static_cast<double>(z.maxCoeff());
      double total = 0.0;
      for (Eigen::Index k = 0; k < z.size(); ++k) total += std::exp(static_cast<double>(z(k)) - mx);
      std::vector<std::pair<double, TokenId>> cand;
      for (Eigen::Index k = 0; k < z.size(); ++k)
        if (allowed[static_cast<std::size_t>(k)]) cand.emplace_back(std::exp(static_cast<double>(z(k)) - mx) / total, static_cast<TokenId>(k));
      const auto k = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(cfg_->bernoulli_top_k));
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                        [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
      for (std::size_t i = 0; i < k; ++i)
        if (uniform01(rng) < cand[i].first) events.push_back(cand[i].second);
      for (auto t : canonical_visit_order({}, events, *vocab_)) src_.push(t);
      src_.push(kSepId);
      return events;
    }
    auto allowed = base_allowed_;
    for (;;) {
      if (static_cast<int>(events.size()) >= cfg_->max_visit_events) {
        src_.push(kSepId);
        break;
      }
      const TokenId t = sample_token(src_.logits(), cfg_->temperature, cfg_->top_k, rng, allowed);
      src_.push(t);
      if (t == kSepId || t == kPadId) break;
      events.push_back(t);
      allowed[static_cast<std::size_t>(t)] = 0;
    }
    return events;
  }

 private:
  DecoderSource<S> src_;
  const Vocabulary* vocab_;
  const RolloutConfig* cfg_;
  std::vector<char> base_allowed_;
};

struct EgeStats {
  int malformed = 0;   // event sampled where a gap was expected
  bool truncated = false;
};

/// Gap-and-event stream: a gap token advances the simulated clock by its
/// bin's representative days; other tokens are events at the current time;
/// Sep closes a visit so a gap is expected next. Stops once the clock passes
/// the horizon or after `max_tokens` draws. `Source` provides logits() and
/// push(TokenId).
template <class Source>
Trajectory ege_generate(Source& src, const Vocabulary& vocab, const RolloutConfig& cfg, Rng& rng,
                        EgeStats* stats = nullptr) {
  Trajectory out;
  std::vector<char> allowed(vocab.size(), 1);
  allowed[kPadId] = 0;
  const BinSpec* gaps = vocab.bin_spec(kGapConcept);
  const double modal_gap = gaps ? vocab.gap_days(*vocab.find(binned_concept(kGapConcept, gaps->modal_bin()))) : cfg.step_days;
  double now = 0.0;
  bool expect_gap = true;
  int drawn = 0;
  while (drawn < cfg.max_tokens) {
    const TokenId t = sample_token(src.logits(), cfg.temperature, cfg.top_k, rng, allowed);
    ++drawn;
    if (vocab.class_of(t) == TokenClass::Gap) {
      now += vocab.gap_days(t);
      expect_gap = false;
      if (now > cfg.horizon_days) return out;
      src.push(t);
      continue;
    }
    if (expect_gap) {
      if (stats) ++stats->malformed;
      now += modal_gap;
      expect_gap = false;
      if (now > cfg.horizon_days) return out;
    }
    src.push(t);
    if (t == kSepId) {
      expect_gap = true;
      continue;
    }
    out.push_back({now, t});
  }
  if (stats) stats->truncated = true;
  return out;
}

}  // namespace nextvisit

#include "nextvisit/tasks.hpp"

namespace nextvisit {

/// Single-pass scores for evaluation windows.
template <class S>
std::vector<double> score_horizon(const ModelParams<S>& p, const ModelConfig& c,
                                  const std::vector<PatientRecord>& records, const std::vector<EvalExample>& examples,
                                  const CodeSet& cs, double horizon_days, Pooling pooling) {
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    RowVec<S> z = horizon_query_logits(p, c, records[ex.patient], ex.first_visit, ex.last_visit, horizon_days);
    out.push_back(pool_code_set(z, cs, pooling));
  }
  return out;
}

/// Rollout seed stream of a window, independent of its position in any list.
inline std::uint64_t window_stream(const std::string& patient_id, long anchor_day) {
  return splitmix64(hash_name(patient_id) ^ static_cast<std::uint64_t>(anchor_day));
}

/// Monte Carlo trajectories from a next-token baseline for one history window.
template <class S>
std::vector<Trajectory> simulate_window(const ModelParams<S>& p, const ModelConfig& c, Objective objective,
                                        const Vocabulary& vocab, const PatientRecord& record, std::size_t first,
                                        std::size_t last, const RolloutConfig& cfg, std::uint64_t stream,
                                        EgeStats* stats = nullptr) {
  if (!is_token_causal(objective)) throw ConfigError("rollouts need a next-token baseline checkpoint");
  FlatSequence hist = baseline_stream(record, first, last, vocab);
  hist.keep_last(static_cast<std::size_t>(c.block_size));
  const int reserve = objective == Objective::Ege ? cfg.max_tokens : 64;
  DecoderSource<S> src(p, c, hist, reserve);
  if (objective != Objective::Ege) return simulate_visits(VisitEmitter<S>(std::move(src), vocab, cfg), cfg, stream);
  cfg.validate();
  std::vector<Trajectory> out;
  for (int r = 0; r < cfg.rollouts; ++r) {
    DecoderSource<S> s = src;
    Rng rng = make_rng(cfg.seed, "rollout", stream * 1000003ULL + static_cast<std::uint64_t>(r));
    EgeStats st;
    out.push_back(ege_generate(s, vocab, cfg, rng, &st));
    if (stats) {
      stats->malformed += st.malformed;
      stats->truncated = stats->truncated || st.truncated;
    }
  }
  return out;
}

template <class S>
std::vector<double> score_rollout(const ModelParams<S>& p, const ModelConfig& c, Objective objective,
                                  const Vocabulary& vocab, const std::vector<PatientRecord>& records,
                                  const std::vector<EvalExample>& examples, const CodeSet& cs,
                                  const RolloutConfig& cfg, EgeStats* stats = nullptr) {
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    auto traj = simulate_window(p, c, objective, vocab, records[ex.patient], ex.first_visit, ex.last_visit, cfg,
                                window_stream(ex.patient_id, ex.anchor_day), stats);
    out.push_back(interval_hit_fraction(traj, cs, cfg.gap_days, cfg.horizon_days));
  }
  return out;
}

}  // namespace nextvisit
