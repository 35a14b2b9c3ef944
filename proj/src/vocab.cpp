#include "nextvisit/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "nextvisit/io.hpp"

namespace nextvisit {
namespace {

constexpr std::string_view kPadConcept = "<pad>";
constexpr std::string_view kSepConcept = "<sep>";
constexpr std::string_view kHeader = "#nextvisit-vocabulary 1";

struct ParsedEvent {
  std::string name;  // concept or measurement
  std::optional<double> value;
};

ParsedEvent parse_event(std::string_view ev) {
  auto eq = ev.rfind('=');
  if (eq == std::string_view::npos) return {std::string(ev), std::nullopt};
  std::string value_text(ev.substr(eq + 1));
  char* end = nullptr;
  double v = std::strtod(value_text.c_str(), &end);
  if (value_text.empty() || end != value_text.c_str() + value_text.size())
    return {std::string(ev), std::nullopt};
  return {std::string(ev.substr(0, eq)), v};
}

std::string join_numbers(const auto& xs) {
  std::string out;
  char buf[40];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out.push_back(',');
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(xs[i])>>) {
      std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(xs[i]));
    } else {
      std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(xs[i]));
    }
    out += buf;
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(TokenClass c) {
  switch (c) {
    case TokenClass::Pad: return "pad";
    case TokenClass::Sep: return "sep";
    case TokenClass::Demographic: return "demographic";
    case TokenClass::AgeBin: return "age_bin";
    case TokenClass::Diagnosis: return "diagnosis";
    case TokenClass::Medication: return "medication";
    case TokenClass::LabBin: return "lab_bin";
    case TokenClass::Gap: return "gap";
  }
  return "unknown";
}

TokenClass token_class_from_string(std::string_view s) {
  for (auto c : {TokenClass::Pad, TokenClass::Sep, TokenClass::Demographic, TokenClass::AgeBin,
                 TokenClass::Diagnosis, TokenClass::Medication, TokenClass::LabBin, TokenClass::Gap}) {
    if (to_string(c) == s) return c;
  }
  throw DataError("unknown token class '" + std::string(s) + "'");
}

TokenClass classify_concept(std::string_view c) {
  if (c == kPadConcept) return TokenClass::Pad;
  if (c == kSepConcept) return TokenClass::Sep;
  if (c.rfind("DEM:", 0) == 0) return TokenClass::Demographic;
  if (c.rfind(kAgeConcept, 0) == 0) return TokenClass::AgeBin;
  if (c.rfind("RX:", 0) == 0) return TokenClass::Medication;
  if (c.rfind("LAB:", 0) == 0) return TokenClass::LabBin;
  if (c.rfind(kGapConcept, 0) == 0) return TokenClass::Gap;
  return TokenClass::Diagnosis;
}

std::string binned_concept(std::string_view measurement, int bin) {
  return std::string(measurement) + "|q" + std::to_string(bin);
}

int BinSpec::bin_of(double value) const {
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), value) - edges.begin());
}

int BinSpec::modal_bin() const {
  if (counts.empty()) return 0;
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

BinSpec fit_quantile_bins(std::string measurement, std::vector<double> values, int n_bins) {
  if (values.empty()) throw DataError("fit_quantile_bins: no values for '" + measurement + "'");
  if (n_bins < 2) throw ConfigError("fit_quantile_bins: n_bins must be >= 2");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  BinSpec spec;
  spec.measurement = std::move(measurement);
  spec.requested_bins = n_bins;
  for (int k = 1; k < n_bins; ++k) {
    double e = values[(static_cast<std::size_t>(k) * n) / static_cast<std::size_t>(n_bins)];
    if (e <= values.front()) continue;  // would leave bin 0 empty
    if (!spec.edges.empty() && e <= spec.edges.back()) continue;
    spec.edges.push_back(e);
  }
  const int nb = spec.effective_bins();
  spec.counts.assign(nb, 0);
  spec.centers.assign(nb, 0.0);
  std::size_t begin = 0;
  for (int b = 0; b < nb; ++b) {
    std::size_t end = b + 1 < nb
                          ? static_cast<std::size_t>(std::lower_bound(values.begin(), values.end(), spec.edges[b]) -
                                                     values.begin())
                          : n;
    spec.counts[b] = end - begin;
    spec.centers[b] = end > begin ? values[begin + (end - begin - 1) / 2] : values[std::min(begin, n - 1)];
    begin = end;
  }
  if (spec.degenerate()) {
    spdlog::warn("measurement '{}' has too few distinct values: {} effective bins of {} requested",
                 spec.measurement, nb, n_bins);
  }
  return spec;
}

Vocabulary::Vocabulary() {
  concepts_ = {std::string(kPadConcept), std::string(kSepConcept)};
  rebuild_index();
}

Vocabulary Vocabulary::from_concepts(std::vector<std::string> concepts, std::map<std::string, BinSpec> bins) {
  std::sort(concepts.begin(), concepts.end());
  concepts.erase(std::unique(concepts.begin(), concepts.end()), concepts.end());
  Vocabulary v;
  v.concepts_ = {std::string(kPadConcept), std::string(kSepConcept)};
  for (auto& c : concepts) {
    if (c == kPadConcept || c == kSepConcept) continue;
    v.concepts_.push_back(std::move(c));
  }
  v.bins_ = std::move(bins);
  v.rebuild_index();
  return v;
}

void Vocabulary::rebuild_index() {
  ids_.clear();
  classes_.clear();
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    ids_.emplace(concepts_[i], static_cast<TokenId>(i));
    classes_.push_back(classify_concept(concepts_[i]));
  }
  // Hash covers everything except the hash line itself.
  auto text = serialize();
  auto cut = text.rfind("hash\t");
  hash_ = sha256_hex(std::string_view(text).substr(0, cut));
}

std::optional<TokenId> Vocabulary::find(std::string_view c) const {
  auto it = ids_.find(std::string(c));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id_of(std::string_view c) const {
  auto id = find(c);
  if (!id) throw DataError("unknown concept '" + std::string(c) + "'");
  return *id;
}

const std::string& Vocabulary::concept_of(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= concepts_.size())
    throw DataError("token id " + std::to_string(id) + " out of range");
  return concepts_[static_cast<std::size_t>(id)];
}

TokenClass Vocabulary::class_of(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= classes_.size())
    throw DataError("token id " + std::to_string(id) + " out of range");
  return classes_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::ids_of_class(TokenClass c) const {
  std::vector<TokenId> out;
  for (std::size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i] == c) out.push_back(static_cast<TokenId>(i));
  return out;
}

const BinSpec* Vocabulary::bin_spec(std::string_view m) const {
  auto it = bins_.find(std::string(m));
  return it == bins_.end() ? nullptr : &it->second;
}

double Vocabulary::gap_days(TokenId id) const {
  const auto& c = concept_of(id);
  const auto* spec = bin_spec(kGapConcept);
  auto bar = c.rfind("|q");
  if (spec == nullptr || class_of(id) != TokenClass::Gap || bar == std::string::npos)
    throw DataError("token '" + c + "' is not a gap token");
  int bin = std::stoi(c.substr(bar + 2));
  return spec->centers.at(static_cast<std::size_t>(bin));
}

std::optional<TokenId> Vocabulary::gap_token_for(double days) const {
  const auto* spec = bin_spec(kGapConcept);
  if (spec == nullptr) return std::nullopt;
  return find(binned_concept(kGapConcept, spec->bin_of(days)));
}

std::string Vocabulary::serialize() const {
  std::string out(kHeader);
  out += "\n";
  for (const auto& [name, b] : bins_) {
    out += "bin\t" + name + "\t" + std::to_string(b.requested_bins) + "\t" + join_numbers(b.edges) + "\t" +
           join_numbers(b.centers) + "\t" + join_numbers(b.counts) + "\n";
  }
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    out += "token\t" + std::to_string(i) + "\t" + concepts_[i] + "\t" +
           std::string(to_string(classify_concept(concepts_[i]))) + "\n";
  }
  out += "hash\t" + hash_ + "\n";
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw DataError("not a vocabulary file (bad header)");
  std::vector<std::string> concepts;
  std::map<std::string, BinSpec> bins;
  std::string stored_hash;
  auto parse_doubles = [](const std::string& s) {
    std::vector<double> v;
    if (s.empty()) return v;
    for (auto& t : split(s, ',')) v.push_back(std::stod(t));
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f[0] == "bin" && f.size() == 6) {
      BinSpec b;
      b.measurement = f[1];
      b.requested_bins = std::stoi(f[2]);
      b.edges = parse_doubles(f[3]);
      b.centers = parse_doubles(f[4]);
      for (double c : parse_doubles(f[5])) b.counts.push_back(static_cast<std::size_t>(c));
      bins.emplace(b.measurement, std::move(b));
    } else if (f[0] == "token" && f.size() == 4) {
      if (std::stoul(f[1]) != concepts.size()) throw DataError("vocabulary ids are not dense");
      concepts.push_back(f[2]);
      if (classify_concept(f[2]) != token_class_from_string(f[3]))
        throw DataError("vocabulary class mismatch for '" + f[2] + "'");
    } else if (f[0] == "hash" && f.size() == 2) {
      stored_hash = f[1];
    } else {
      throw DataError("malformed vocabulary line: " + line);
    }
  }
  if (concepts.size() < 2 || concepts[0] != kPadConcept || concepts[1] != kSepConcept)
    throw DataError("vocabulary must reserve <pad>=0 and <sep>=1");
  Vocabulary v;
  v.concepts_ = std::move(concepts);
  v.bins_ = std::move(bins);
  v.rebuild_index();
  if (!stored_hash.empty() && stored_hash != v.hash_)
    throw ProvenanceError("vocabulary content hash mismatch (file edited or corrupted)");
  return v;
}

std::map<std::string, BinSpec> fit_corpus_bins(const std::vector<RawRecord>& records, int lab_bins, int age_bins,
                                               int gap_bins) {
  std::map<std::string, std::vector<double>> values;
  std::vector<double> gaps;
  for (const auto& r : records) {
    auto collect = [&](const std::string& ev) {
      auto p = parse_event(ev);
      if (p.value) values[p.name].push_back(*p.value);
    };
    for (const auto& s : r.static_concepts) collect(s);
    for (std::size_t v = 0; v < r.visits.size(); ++v) {
      for (const auto& ev : r.visits[v].events) collect(ev);
      if (v > 0) gaps.push_back(static_cast<double>(r.visits[v].day - r.visits[v - 1].day));
    }
  }
  std::map<std::string, BinSpec> bins;
  for (auto& [name, xs] : values) {
    int n = classify_concept(name) == TokenClass::AgeBin ? age_bins : lab_bins;
    bins.emplace(name, fit_quantile_bins(name, std::move(xs), n));
  }
  if (gap_bins > 0 && !gaps.empty())
    bins.emplace(std::string(kGapConcept), fit_quantile_bins(std::string(kGapConcept), std::move(gaps), gap_bins));
  return bins;
}

Vocabulary build_vocab(const std::vector<RawRecord>& records, const std::map<std::string, BinSpec>& bins) {
  std::set<std::string> concepts;
  auto add = [&](const std::string& ev) {
    auto p = parse_event(ev);
    if (!p.value) concepts.insert(p.name);
  };
  for (const auto& r : records) {
    for (const auto& s : r.static_concepts) add(s);
    for (const auto& v : r.visits)
      for (const auto& ev : v.events) add(ev);
  }
  for (const auto& [name, spec] : bins)
    for (int b = 0; b < spec.effective_bins(); ++b) concepts.insert(binned_concept(name, b));
  return Vocabulary::from_concepts({concepts.begin(), concepts.end()}, bins);
}

namespace {

std::optional<TokenId> lookup_parsed(const std::string& name, std::optional<double> value,
                                     const Vocabulary& vocab) {
  if (!value) return vocab.find(name);
  const auto* spec = vocab.bin_spec(name);
  if (spec == nullptr) return std::nullopt;
  return vocab.find(binned_concept(name, spec->bin_of(*value)));
}

std::optional<TokenId> lookup_event(const std::string& ev, const Vocabulary& vocab) {
  auto p = parse_event(ev);
  return lookup_parsed(p.name, p.value, vocab);
}

void sort_unique(std::vector<TokenId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Sorts by day, merges same-day visits, and shifts so the first visit is day 0.
std::vector<Visit> normalize_visits(std::vector<Visit> visits) {
  std::stable_sort(visits.begin(), visits.end(), [](const Visit& a, const Visit& b) { return a.day < b.day; });
  std::vector<Visit> out;
  for (auto& v : visits) {
    if (!out.empty() && out.back().day == v.day) {
      out.back().tokens.insert(out.back().tokens.end(), v.tokens.begin(), v.tokens.end());
    } else {
      out.push_back(std::move(v));
    }
  }
  const long origin = out.empty() ? 0 : out.front().day;
  for (auto& v : out) {
    v.day -= origin;
    sort_unique(v.tokens);
  }
  return out;
}

}  // namespace

PatientRecord encode_record(const RawRecord& record, const Vocabulary& vocab, bool strict, EncodeStats* stats) {
  PatientRecord out;
  out.patient_id = record.patient_id;
  auto map_one = [&](const std::string& ev, std::vector<TokenId>& dst) {
    auto id = lookup_event(ev, vocab);
    if (id) {
      dst.push_back(*id);
      return;
    }
    if (strict) throw DataError("patient '" + record.patient_id + "': unknown concept '" + ev + "'");
    if (stats) ++stats->dropped_unknown;
    spdlog::debug("patient '{}': dropping unknown concept '{}'", record.patient_id, ev);
  };
  for (const auto& s : record.static_concepts) map_one(s, out.static_tokens);
  sort_unique(out.static_tokens);
  std::vector<Visit> visits;
  for (const auto& rv : record.visits) {
    Visit v{rv.day, {}};
    for (const auto& ev : rv.events) map_one(ev, v.tokens);
    visits.push_back(std::move(v));
  }
  out.visits = normalize_visits(std::move(visits));
  return out;
}

RawRecord decode_record(const PatientRecord& record, const Vocabulary& vocab) {
  RawRecord out;
  out.patient_id = record.patient_id;
  for (auto t : record.static_tokens) out.static_concepts.push_back(vocab.concept_of(t));
  for (const auto& v : record.visits) {
    RawVisit rv{v.day, {}};
    for (auto t : v.tokens) rv.events.push_back(vocab.concept_of(t));
    out.visits.push_back(std::move(rv));
  }
  return out;
}

std::size_t DropReport::dropped_total() const {
  std::size_t n = 0;
  for (const auto& [_, c] : dropped) n += c;
  return n;
}

std::pair<PatientRecord, DropReport> map_external_codes(const RawRecord& record,
                                                        const std::map<std::string, std::string>& table,
                                                        const Vocabulary& vocab) {
  DropReport report;
  PatientRecord out;
  out.patient_id = record.patient_id;
  for (const auto& s : record.static_concepts) {
    if (auto id = lookup_event(s, vocab)) out.static_tokens.push_back(*id);
  }
  sort_unique(out.static_tokens);
  std::vector<Visit> visits;
  for (const auto& rv : record.visits) {
    Visit v{rv.day, {}};
    for (const auto& ev : rv.events) {
      ++report.total_events;
      auto p = parse_event(ev);
      auto hit = table.find(p.name);
      if (hit == table.end()) {
        ++report.dropped["unmapped"];
        continue;
      }
      auto id = lookup_parsed(hit->second, p.value, vocab);
      if (!id) {
        ++report.dropped["out_of_vocabulary"];
        continue;
      }
      v.tokens.push_back(*id);
      ++report.mapped[std::string(to_string(vocab.class_of(*id)))];
      ++report.mapped_events;
    }
    visits.push_back(std::move(v));
  }
  out.visits = normalize_visits(std::move(visits));
  return {std::move(out), std::move(report)};
}

SplitIndices split_patients(std::size_t n, const std::vector<double>& ratios, std::uint64_t seed) {
  if (ratios.size() != 3) throw ConfigError("split ratios must have three entries");
  for (double r : ratios)
    if (r < 0.0) throw ConfigError("split ratios must be non-negative");
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, "split");
  for (std::size_t i = n; i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n))));
  const auto n_val =
      std::min(n - n_train, static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  if (s.train.empty() || s.val.empty() || s.test.empty())
    spdlog::warn("split of {} patients leaves an empty partition ({}/{}/{})", n, s.train.size(), s.val.size(),
                 s.test.size());
  return s;
}

double mean_tokens_per_visit(const std::vector<PatientRecord>& records) {
  std::size_t tokens = 0, visits = 0;
  for (const auto& r : records) {
    for (const auto& v : r.visits) {
      std::vector<TokenId> merged = r.static_tokens;
      merged.insert(merged.end(), v.tokens.begin(), v.tokens.end());
      sort_unique(merged);
      tokens += merged.size();
      ++visits;
    }
  }
  return visits == 0 ? 0.0 : static_cast<double>(tokens) / static_cast<double>(visits);
}

}  // namespace nextvisit
