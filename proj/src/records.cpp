#include "nextvisit/records.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "nextvisit/io.hpp"

namespace nextvisit {

using nlohmann::json;

namespace {

template <class F>
void for_each_line(const std::string& text, F&& f) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(n) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<RawRecord> parse_raw_records(const std::string& jsonl) {
  std::vector<RawRecord> out;
  for_each_line(jsonl, [&](const json& j) {
    RawRecord r;
    r.patient_id = j.at("patient_id").get<std::string>();
    if (j.contains("static")) r.static_concepts = j.at("static").get<std::vector<std::string>>();
    for (const auto& v : j.at("visits")) {
      r.visits.push_back({v.at("day").get<long>(), v.at("events").get<std::vector<std::string>>()});
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::string serialize_raw_records(const std::vector<RawRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["patient_id"] = r.patient_id;
    j["static"] = r.static_concepts;
    json visits = json::array();
    for (const auto& v : r.visits) visits.push_back({{"day", v.day}, {"events", v.events}});
    j["visits"] = std::move(visits);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<RawRecord> load_raw_records(const std::string& path) {
  try {
    return parse_raw_records(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string serialize_encoded_records(const std::vector<PatientRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["patient_id"] = r.patient_id;
    j["static"] = r.static_tokens;
    json visits = json::array();
    for (const auto& v : r.visits) visits.push_back({{"day", v.day}, {"tokens", v.tokens}});
    j["visits"] = std::move(visits);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<PatientRecord> parse_encoded_records(const std::string& jsonl) {
  std::vector<PatientRecord> out;
  for_each_line(jsonl, [&](const json& j) {
    PatientRecord r;
    r.patient_id = j.at("patient_id").get<std::string>();
    r.static_tokens = j.at("static").get<std::vector<TokenId>>();
    for (const auto& v : j.at("visits")) r.visits.push_back({v.at("day").get<long>(), v.at("tokens").get<std::vector<TokenId>>()});
    out.push_back(std::move(r));
  });
  return out;
}

bool CodeSet::contains(TokenId t) const { return std::binary_search(tokens.begin(), tokens.end(), t); }

std::map<std::string, std::vector<std::string>> parse_codeset_file(const std::string& json_text) {
  try {
    return json::parse(json_text).get<std::map<std::string, std::vector<std::string>>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed code-set file: ") + e.what());
  }
}

std::string serialize_codeset_file(const std::map<std::string, std::vector<std::string>>& sets) {
  return json(sets).dump(2) + "\n";
}

std::vector<CodeSet> resolve_codesets(const std::map<std::string, std::vector<std::string>>& sets,
                                      const Vocabulary& vocab) {
  std::vector<CodeSet> out;
  for (const auto& [name, concepts] : sets) {
    CodeSet cs{name, {}};
    for (const auto& c : concepts) {
      if (auto id = vocab.find(c)) {
        cs.tokens.push_back(*id);
      } else {
        spdlog::warn("condition '{}': concept '{}' not in vocabulary", name, c);
      }
    }
    std::sort(cs.tokens.begin(), cs.tokens.end());
    cs.tokens.erase(std::unique(cs.tokens.begin(), cs.tokens.end()), cs.tokens.end());
    if (cs.tokens.empty()) throw DataError("condition '" + name + "' has no codes in the vocabulary");
    out.push_back(std::move(cs));
  }
  return out;
}

std::string serialize_truth(const std::vector<PatientTruth>& truth) {
  std::string out;
  for (const auto& t : truth) {
    json j;
    j["patient_id"] = t.patient_id;
    j["first_day"] = t.first_day;
    j["last_day"] = t.last_day;
    json onset = json::object();
    for (const auto& [c, d] : t.onset) onset[c] = d ? json(*d) : json(nullptr);
    j["onset"] = std::move(onset);
    j["occurrences"] = t.occurrences;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<PatientTruth> parse_truth(const std::string& jsonl) {
  std::vector<PatientTruth> out;
  for_each_line(jsonl, [&](const json& j) {
    PatientTruth t;
    t.patient_id = j.at("patient_id").get<std::string>();
    t.first_day = j.value("first_day", 0L);
    t.last_day = j.at("last_day").get<long>();
    for (const auto& [c, d] : j.at("onset").items()) {
      t.onset[c] = d.is_null() ? std::nullopt : std::optional<long>(d.get<long>());
    }
    if (j.contains("occurrences")) t.occurrences = j.at("occurrences").get<std::map<std::string, std::vector<long>>>();
    out.push_back(std::move(t));
  });
  return out;
}

std::vector<PatientTruth> derive_truth(const std::vector<PatientRecord>& records, const std::vector<CodeSet>& sets) {
  std::vector<PatientTruth> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    PatientTruth t;
    t.patient_id = r.patient_id;
    t.first_day = r.visits.empty() ? 0 : r.visits.front().day;
    t.last_day = r.visits.empty() ? 0 : r.visits.back().day;
    for (const auto& cs : sets) {
      auto& occ = t.occurrences[cs.condition];
      for (const auto& v : r.visits) {
        if (std::any_of(v.tokens.begin(), v.tokens.end(), [&](TokenId x) { return cs.contains(x); }))
          occ.push_back(v.day);
      }
      t.onset[cs.condition] = occ.empty() ? std::nullopt : std::optional<long>(occ.front());
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace nextvisit
