#include "nextvisit/sequence.hpp"

#include <algorithm>
#include <map>

#include <spdlog/spdlog.h>

namespace nextvisit {

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::Raven: return "raven";
    case Objective::Multiclass: return "multiclass";
    case Objective::SeqLoss: return "seqloss";
    case Objective::Ege: return "ege";
  }
  return "?";
}

Objective objective_from_string(std::string_view s) {
  if (s == "raven") return Objective::Raven;
  if (s == "multiclass") return Objective::Multiclass;
  if (s == "seqloss") return Objective::SeqLoss;
  if (s == "ege") return Objective::Ege;
  throw ConfigError("unknown objective '" + std::string(s) + "' (raven|multiclass|seqloss|ege)");
}

void FlatSequence::append(const FlatSequence& other) {
  tokens.insert(tokens.end(), other.tokens.begin(), other.tokens.end());
  visit.insert(visit.end(), other.visit.begin(), other.visit.end());
  day.insert(day.end(), other.day.begin(), other.day.end());
  rank.insert(rank.end(), other.rank.begin(), other.rank.end());
}

void FlatSequence::keep_last(std::size_t n) {
  if (size() <= n) return;
  const auto drop = static_cast<std::ptrdiff_t>(size() - n);
  tokens.erase(tokens.begin(), tokens.begin() + drop);
  visit.erase(visit.begin(), visit.begin() + drop);
  day.erase(day.begin(), day.begin() + drop);
  rank.erase(rank.begin(), rank.begin() + drop);
}

namespace {

std::size_t visit_cost(const PatientRecord& r, std::size_t v) { return r.static_tokens.size() + r.visits[v].tokens.size() + 1; }

}  // namespace

FlatSequence flatten(const PatientRecord& record, std::size_t first, std::size_t last, double final_sep_day,
                     std::size_t block_size, bool* truncated) {
  if (first >= last || last > record.visits.size()) throw DataError("flatten: empty or out-of-range visit window");
  FlatSequence out;
  const double origin = static_cast<double>(record.visits[first].day);
  for (std::size_t v = first; v < last; ++v) {
    const int vi = static_cast<int>(v - first);
    const double day = static_cast<double>(record.visits[v].day) - origin;
    for (auto t : record.static_tokens) out.push(t, vi, day);
    for (auto t : record.visits[v].tokens) out.push(t, vi, day);
    const double sep_day = v + 1 < last ? static_cast<double>(record.visits[v + 1].day) - origin : final_sep_day;
    out.push(kSepId, vi, sep_day);
  }
  const bool cut = out.size() > block_size;
  if (cut) {
    spdlog::warn("patient '{}': {} tokens exceed block size {}, keeping the most recent", record.patient_id,
                 out.size(), block_size);
    out.keep_last(block_size);
  }
  if (truncated) *truncated = cut;
  return out;
}

std::vector<TrainWindow> make_train_windows(const PatientRecord& record, std::size_t block_size) {
  std::vector<TrainWindow> out;
  const std::size_t n = record.visits.size();
  std::size_t first = 0;
  while (first < n) {
    std::size_t last = first, len = 0;
    while (last < n && (last == first || len + visit_cost(record, last) <= block_size)) len += visit_cost(record, last++);

    const double origin = static_cast<double>(record.visits[first].day);
    const double final_day =
        static_cast<double>(last < n ? record.visits[last].day : record.visits[last - 1].day) - origin;
    TrainWindow w;
    w.seq = flatten(record, first, last, final_day, block_size);
    const std::size_t dropped = len - w.seq.size();

    std::map<TokenId, int> seen;
    std::size_t pos = 0;
    for (std::size_t v = first; v < last; ++v) {
      for (auto t : record.visits[v].tokens) ++seen[t];
      pos += visit_cost(record, v);
      if (v + 1 >= n || pos - 1 < dropped) continue;
      SepTarget s;
      s.position = static_cast<int>(pos - 1 - dropped);
      s.positives = record.visits[v + 1].tokens;
      for (auto t : s.positives) {
        auto it = seen.find(t);
        s.counts.push_back(it == seen.end() ? 0 : it->second);
      }
      w.seps.push_back(std::move(s));
    }
    out.push_back(std::move(w));
    first = last;
  }
  return out;
}

std::vector<PackedRow> pack_windows(const std::vector<TrainWindow>& windows, std::size_t block_size) {
  std::vector<PackedRow> rows;
  for (const auto& w : windows) {
    if (rows.empty() || rows.back().seq.size() + w.seq.size() > block_size) rows.emplace_back();
    PackedRow& row = rows.back();
    const int offset = static_cast<int>(row.seq.size());
    FlatSequence s = w.seq;
    std::fill(s.rank.begin(), s.rank.end(), row.n_windows);
    row.seq.append(s);
    for (auto sep : w.seps) {
      sep.position += offset;
      row.seps.push_back(std::move(sep));
    }
    ++row.n_windows;
  }
  return rows;
}

std::vector<TokenId> canonical_visit_order(const std::vector<TokenId>& statics, const std::vector<TokenId>& tokens,
                                           const Vocabulary& vocab) {
  static constexpr TokenClass kOrder[] = {TokenClass::Demographic, TokenClass::AgeBin, TokenClass::Diagnosis,
                                          TokenClass::Medication, TokenClass::LabBin};
  auto rank_of = [&](TokenId t) {
    const auto c = vocab.class_of(t);
    for (int i = 0; i < 5; ++i)
      if (kOrder[i] == c) return i;
    return 5;
  };
  std::vector<TokenId> out(statics);
  out.insert(out.end(), tokens.begin(), tokens.end());
  std::sort(out.begin(), out.end(), [&](TokenId a, TokenId b) {
    const int ra = rank_of(a), rb = rank_of(b);
    return ra != rb ? ra < rb : a < b;
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

FlatSequence baseline_stream(const PatientRecord& record, std::size_t first, std::size_t last,
                             const Vocabulary& vocab) {
  FlatSequence out;
  auto push = [&](TokenId t) {
    const int p = static_cast<int>(out.size());
    out.push(t, p, static_cast<double>(p));
  };
  for (std::size_t v = first; v < last; ++v) {
    if (v > first) {
      const double gap = static_cast<double>(record.visits[v].day - record.visits[v - 1].day);
      if (auto g = vocab.gap_token_for(gap)) push(*g);
    }
    for (auto t : canonical_visit_order(record.static_tokens, record.visits[v].tokens, vocab)) push(t);
    push(kSepId);
  }
  return out;
}

std::vector<TokenSequence> make_baseline_sequences(const PatientRecord& record, const Vocabulary& vocab,
                                                   Objective objective, std::size_t block_size) {
  if (objective == Objective::Raven) throw ConfigError("make_baseline_sequences: not a token-causal objective");
  const bool has_gap = vocab.bin_spec(kGapConcept) != nullptr;
  std::vector<TokenSequence> out;
  const std::size_t n = record.visits.size();
  std::size_t first = 0;
  while (first < n) {
    std::size_t last = first, len = 0;
    while (last < n) {
      const std::size_t cost = visit_cost(record, last) + (last > first && has_gap ? 1 : 0);
      if (last > first && len + cost > block_size) break;
      len += cost;
      ++last;
    }
    TokenSequence ts;
    ts.seq = baseline_stream(record, first, last, vocab);
    ts.seq.keep_last(block_size);
    if (ts.seq.size() < len) {
      spdlog::warn("patient '{}': visit longer than block size {}, truncated", record.patient_id, block_size);
      for (std::size_t p = 0; p < ts.seq.size(); ++p) ts.seq.visit[p] = ts.seq.day[p] = static_cast<int>(p);
    }
    const std::size_t T = ts.seq.size();
    ts.targets.assign(T, {});
    const auto& tok = ts.seq.tokens;

    if (objective == Objective::SeqLoss) {
      // Visit contents are the runs between a gap/Sep boundary and the next Sep.
      std::size_t s = 0;
      while (s < T) {
        while (s < T && (tok[s] == kSepId || vocab.class_of(tok[s]) == TokenClass::Gap)) ++s;
        std::size_t e = s;
        while (e < T && tok[e] != kSepId) ++e;
        if (e >= T) break;
        for (std::size_t j = s; j <= e; ++j) {
          if (j == 0) continue;
          auto& tgt = ts.targets[j - 1];
          if (j == e) {
            tgt.emplace_back(kSepId, 1.0);
          } else {
            const double w = 1.0 / static_cast<double>(e - j);
            for (std::size_t x = j; x < e; ++x) tgt.emplace_back(tok[x], w);
          }
        }
        ts.denom += 1.0;
        s = e + 1;
      }
    } else {
      for (std::size_t p = 0; p + 1 < T; ++p) {
        const TokenId next = tok[p + 1];
        if (objective == Objective::Multiclass && vocab.class_of(next) == TokenClass::Gap) continue;
        ts.targets[p].emplace_back(next, 1.0);
        ts.denom += 1.0;
      }
    }
    out.push_back(std::move(ts));
    first = last;
  }
  return out;
}

}  // namespace nextvisit
