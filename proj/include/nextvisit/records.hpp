#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nextvisit/vocab.hpp"

namespace nextvisit {

// Dataset file: one JSON object per line,
//   {"patient_id": "...", "static": [concept...], "visits": [{"day": int, "events": [concept...]}...]}
std::vector<RawRecord> parse_raw_records(const std::string& jsonl);
std::string serialize_raw_records(const std::vector<RawRecord>& records);
std::vector<RawRecord> load_raw_records(const std::string& path);

// Encoded dataset: same layout with token ids ("static": [id...], "visits": [{"day", "tokens": [id...]}]).
std::string serialize_encoded_records(const std::vector<PatientRecord>& records);
std::vector<PatientRecord> parse_encoded_records(const std::string& jsonl);

/// A condition and the token ids whose first occurrence defines its onset.
struct CodeSet {
  std::string condition;
  std::vector<TokenId> tokens;  // sorted, non-empty
  bool contains(TokenId t) const;
};

// Code-set file: {"condition": ["DX:...", "RX:..."], ...}
std::map<std::string, std::vector<std::string>> parse_codeset_file(const std::string& json_text);
std::string serialize_codeset_file(const std::map<std::string, std::vector<std::string>>& sets);
/// Resolves concept strings; concepts missing from the vocabulary are
/// skipped with a warning, an empty result is a DataError.
std::vector<CodeSet> resolve_codesets(const std::map<std::string, std::vector<std::string>>& sets,
                                      const Vocabulary& vocab);

/// Per-patient ground truth for evaluation.
struct PatientTruth {
  std::string patient_id;
  long first_day = 0;
  long last_day = 0;  // end of observed follow-up
  std::map<std::string, std::optional<long>> onset;
  std::map<std::string, std::vector<long>> occurrences;
};

std::string serialize_truth(const std::vector<PatientTruth>& truth);
std::vector<PatientTruth> parse_truth(const std::string& jsonl);

/// Truth implied by the records themselves: first and all occurrences of any
/// code-set token, follow-up ending at the last visit.
std::vector<PatientTruth> derive_truth(const std::vector<PatientRecord>& records, const std::vector<CodeSet>& sets);

}  // namespace nextvisit
