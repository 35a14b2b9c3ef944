#pragma once

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include "nextvisit/vocab.hpp"

namespace nextvisit {

enum class Objective { Raven, Multiclass, SeqLoss, Ege };

std::string_view to_string(Objective o);
Objective objective_from_string(std::string_view s);  // throws ConfigError
inline bool is_token_causal(Objective o) { return o != Objective::Raven; }

/// Model input for one row. `visit` orders attention (keys with a larger
/// (rank, visit) pair are hidden); `day` feeds the rotary angle.
struct FlatSequence {
  std::vector<TokenId> tokens;
  std::vector<int> visit;
  std::vector<double> day;
  std::vector<int> rank;

  std::size_t size() const { return tokens.size(); }
  void push(TokenId t, int v, double d, int r = 0) {
    tokens.push_back(t);
    visit.push_back(v);
    day.push_back(d);
    rank.push_back(r);
  }
  void append(const FlatSequence& other);
  /// Drops all but the last `n` positions.
  void keep_last(std::size_t n);
};

/// Visits [first, last) of `record`: per visit the static tokens, the visit's
/// tokens, then one Sep. Days are relative to visits[first]; the Sep closing a
/// visit carries the next visit's day, the final Sep carries `final_sep_day`.
/// Longer than `block_size` -> front-truncated with a warning.
FlatSequence flatten(const PatientRecord& record, std::size_t first, std::size_t last, double final_sep_day,
                     std::size_t block_size, bool* truncated = nullptr);

/// A supervised Sep: target is the next visit's token set, `counts[i]` is the
/// number of visits in the visible window (up to the Sep) containing
/// `positives[i]`.
struct SepTarget {
  int position = 0;
  std::vector<TokenId> positives;
  std::vector<int> counts;
};

struct TrainWindow {
  FlatSequence seq;
  std::vector<SepTarget> seps;
};

/// Greedy consecutive chunks of visits whose flattened length fits
/// `block_size`. Each chunk's last Sep is timed and supervised by the visit
/// that follows it (unsupervised for the patient's final visit).
std::vector<TrainWindow> make_train_windows(const PatientRecord& record, std::size_t block_size);

/// Several windows concatenated into one row, told apart by rank 0, 1, ...
struct PackedRow {
  FlatSequence seq;
  std::vector<SepTarget> seps;
  int n_windows = 0;
};

/// First-fit in input order: a window joins the current row while the row
/// stays within `block_size`.
std::vector<PackedRow> pack_windows(const std::vector<TrainWindow>& windows, std::size_t block_size);

/// Token-causal sequence for the next-token baselines. Each visit is
/// [GAP][statics][age][dx][rx][labs][SEP] (no gap before the window's first
/// visit); `targets[p]` is a weighted target distribution for position p.
struct TokenSequence {
  FlatSequence seq;
  std::vector<std::vector<std::pair<TokenId, double>>> targets;
  double denom = 0.0;  // loss normaliser contribution of this row
};

/// Canonical within-visit order used by the baselines.
std::vector<TokenId> canonical_visit_order(const std::vector<TokenId>& statics, const std::vector<TokenId>& tokens,
                                           const Vocabulary& vocab);

/// Token stream (ids only) for visits [first, last), token-causal positions.
FlatSequence baseline_stream(const PatientRecord& record, std::size_t first, std::size_t last,
                             const Vocabulary& vocab);

std::vector<TokenSequence> make_baseline_sequences(const PatientRecord& record, const Vocabulary& vocab,
                                                   Objective objective, std::size_t block_size);

}  // namespace nextvisit
