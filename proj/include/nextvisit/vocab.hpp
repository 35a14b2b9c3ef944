#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nextvisit/common.hpp"

namespace nextvisit {

enum class TokenClass : std::uint8_t { Pad, Sep, Demographic, AgeBin, Diagnosis, Medication, LabBin, Gap };

std::string_view to_string(TokenClass c);
TokenClass token_class_from_string(std::string_view s);

// Raw event syntax:
//   DEM:<value>          demographic (static)
//   DX:<code>, RX:<code> diagnosis / medication
//   AGE=<years>          continuous, binned into AGE|q<k>
//   LAB:<name>=<value>   continuous, binned into LAB:<name>|q<k>
// Binned concepts are spelled "<measurement>|q<bin>".
inline constexpr std::string_view kGapConcept = "GAP";
inline constexpr std::string_view kAgeConcept = "AGE";

/// Class implied by a concept's prefix; unknown prefixes are treated as diagnoses.
TokenClass classify_concept(std::string_view concept_name);
std::string binned_concept(std::string_view measurement, int bin);

/// Quantile cut points for one continuous measurement. Bins are
/// lower-inclusive: bin(v) = number of edges <= v.
struct BinSpec {
  std::string measurement;
  int requested_bins = 0;
  std::vector<double> edges;
  std::vector<double> centers;  // median training value per bin
  std::vector<std::size_t> counts;

  int effective_bins() const { return static_cast<int>(edges.size()) + 1; }
  bool degenerate() const { return effective_bins() < requested_bins; }
  int bin_of(double value) const;
  /// Bin with the most training mass (lowest index on ties).
  int modal_bin() const;
};

/// k/n_bins empirical quantiles (sorted[floor(k*N/n_bins)]), k = 1..n_bins-1.
/// Duplicate edges and edges at the minimum are collapsed; a warning is logged
/// when the effective bin count falls below `n_bins`.
BinSpec fit_quantile_bins(std::string measurement, std::vector<double> values, int n_bins);

class Vocabulary {
 public:
  Vocabulary();

  /// Reserved ids first (Pad=0, Sep=1), then `concepts` sorted by string.
  static Vocabulary from_concepts(std::vector<std::string> concepts, std::map<std::string, BinSpec> bins);

  std::size_t size() const { return concepts_.size(); }
  std::optional<TokenId> find(std::string_view concept_name) const;
  TokenId id_of(std::string_view concept_name) const;  // throws DataError
  const std::string& concept_of(TokenId id) const;
  TokenClass class_of(TokenId id) const;
  std::vector<TokenId> ids_of_class(TokenClass c) const;

  const std::map<std::string, BinSpec>& bins() const { return bins_; }
  const BinSpec* bin_spec(std::string_view measurement) const;

  /// Days represented by a gap token (median training gap of its bin).
  double gap_days(TokenId id) const;
  std::optional<TokenId> gap_token_for(double days) const;

  std::string serialize() const;
  static Vocabulary parse(std::string_view text);
  const std::string& content_hash() const { return hash_; }

 private:
  void rebuild_index();

  std::vector<std::string> concepts_;
  std::vector<TokenClass> classes_;
  std::unordered_map<std::string, TokenId> ids_;
  std::map<std::string, BinSpec> bins_;
  std::string hash_;
};

struct RawVisit {
  long day = 0;
  std::vector<std::string> events;
};

struct RawRecord {
  std::string patient_id;
  std::vector<std::string> static_concepts;
  std::vector<RawVisit> visits;
};

struct Visit {
  long day = 0;
  std::vector<TokenId> tokens;  // sorted, unique
};

struct PatientRecord {
  std::string patient_id;
  std::vector<TokenId> static_tokens;  // sorted, unique
  std::vector<Visit> visits;           // strictly increasing day, visits[0].day == 0
};

/// Fits bins for every continuous measurement in the corpus (AGE uses
/// `age_bins`, labs use `lab_bins`). When `gap_bins` > 0 the inter-visit
/// gap distribution is binned as well, for the next-token baselines.
std::map<std::string, BinSpec> fit_corpus_bins(const std::vector<RawRecord>& records, int lab_bins = 10,
                                               int age_bins = 10, int gap_bins = 10);

Vocabulary build_vocab(const std::vector<RawRecord>& records, const std::map<std::string, BinSpec>& bins);

struct EncodeStats {
  std::size_t dropped_unknown = 0;
};

/// Maps concepts to ids, normalizes days so the first visit is day 0, merges
/// same-day visits, and stores each visit as a sorted set. With `strict` an
/// unknown concept raises DataError naming it; otherwise it is dropped.
PatientRecord encode_record(const RawRecord& record, const Vocabulary& vocab, bool strict = true,
                            EncodeStats* stats = nullptr);

RawRecord decode_record(const PatientRecord& record, const Vocabulary& vocab);

struct DropReport {
  std::map<std::string, std::size_t> mapped;   // per token class
  std::map<std::string, std::size_t> dropped;  // "unmapped", "out_of_vocabulary"
  std::size_t total_events = 0;
  std::size_t mapped_events = 0;
  double mapped_fraction() const {
    return total_events == 0 ? 0.0 : static_cast<double>(mapped_events) / static_cast<double>(total_events);
  }
  std::size_t dropped_total() const;
};

/// Lossy transfer from an external coding system: each event code (the part
/// before any '=') is looked up in `table`; unmapped or out-of-vocabulary
/// events are dropped and counted. Static concepts pass through unchanged.
std::pair<PatientRecord, DropReport> map_external_codes(const RawRecord& record,
                                                        const std::map<std::string, std::string>& table,
                                                        const Vocabulary& vocab);

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Patient-level partition; counts are round(ratio * n) for train and
/// validation with the remainder in test.
SplitIndices split_patients(std::size_t n_patients, const std::vector<double>& ratios, std::uint64_t seed);

double mean_tokens_per_visit(const std::vector<PatientRecord>& records);

}  // namespace nextvisit
