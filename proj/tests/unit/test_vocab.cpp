#include <doctest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "nextvisit/sequence.hpp"
#include "nextvisit/vocab.hpp"

using namespace nextvisit;

namespace {

std::vector<RawRecord> small_corpus() {
  std::vector<RawRecord> out;
  for (int i = 0; i < 20; ++i) {
    RawRecord r;
    r.patient_id = "P" + std::to_string(i);
    r.static_concepts = {i % 2 ? "DEM:SEX=F" : "DEM:SEX=M"};
    r.visits.push_back({0, {"DX:A", "RX:X", "LAB:L0=" + std::to_string(i * 5)}});
    r.visits.push_back({30, {"DX:" + std::string(1, static_cast<char>('A' + i % 3)), "RX:Y",
                             "LAB:L0=" + std::to_string(i * 5 + 2)}});
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_SUITE("vocab") {

TEST_CASE("quantile edges follow the k/n rule") {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  auto b = fit_quantile_bins("X", v, 10);
  REQUIRE(b.edges.size() == 9);
  for (int k = 1; k < 10; ++k) CHECK(b.edges[k - 1] == 10.0 * k);
  CHECK(b.bin_of(-5) == 0);
  CHECK(b.bin_of(9.99) == 0);
  CHECK(b.bin_of(10) == 1);  // lower-inclusive
  CHECK(b.bin_of(1e9) == 9);
  for (auto c : b.counts) CHECK(c == 10);
}

TEST_CASE("degenerate measurement collapses to one bin") {
  auto b = fit_quantile_bins("X", {5, 5, 5, 5}, 2);
  CHECK(b.effective_bins() == 1);
  CHECK(b.degenerate());
  CHECK_THROWS_AS(fit_quantile_bins("X", {}, 2), DataError);
  CHECK_THROWS_AS(fit_quantile_bins("X", {1}, 1), ConfigError);
}

TEST_CASE("binning is monotone") {
  Rng rng = make_rng(3, "q");
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(std::floor(uniform01(rng) * 40.0));
  auto b = fit_quantile_bins("X", v, 10);
  for (double a = -1; a < 42; a += 0.25) CHECK(b.bin_of(a) <= b.bin_of(a + 0.25));
}

TEST_CASE("vocabulary size counts concepts, bins and reserved tokens") {
  std::vector<RawRecord> corpus;
  for (int i = 0; i < 10; ++i) {
    RawRecord r;
    r.patient_id = "P" + std::to_string(i);
    r.static_concepts = {i % 2 ? "DEM:SEX=F" : "DEM:SEX=M"};
    r.visits.push_back({0, {"DX:D" + std::to_string(i % 3), "RX:M" + std::to_string(i % 2), "LAB:L=" + std::to_string(i)}});
    corpus.push_back(r);
  }
  auto bins = fit_corpus_bins(corpus, 10, 10, 0);
  auto v = build_vocab(corpus, bins);
  CHECK(v.size() == 3 + 2 + 10 + 2 + 2);
  CHECK(v.id_of("<pad>") == kPadId);
  CHECK(v.id_of("<sep>") == kSepId);
  CHECK(build_vocab({}, {}).size() == 2);
}

TEST_CASE("ids and concepts are inverse; file round trip is exact") {
  auto corpus = small_corpus();
  auto v = build_vocab(corpus, fit_corpus_bins(corpus));
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.id_of(v.concept_of(static_cast<TokenId>(i))) == static_cast<TokenId>(i));
  auto text = v.serialize();
  auto w = Vocabulary::parse(text);
  CHECK(w.serialize() == text);
  CHECK(w.content_hash() == v.content_hash());
  std::string bad = text;
  bad.replace(bad.find("DX:A"), 4, "DX:Q");
  CHECK_THROWS(Vocabulary::parse(bad));
}

TEST_CASE("vocabulary is invariant to corpus order") {
  auto corpus = small_corpus();
  auto v1 = build_vocab(corpus, fit_corpus_bins(corpus));
  std::reverse(corpus.begin(), corpus.end());
  auto v2 = build_vocab(corpus, fit_corpus_bins(corpus));
  CHECK(v1.serialize() == v2.serialize());
}

TEST_CASE("encode dedups, normalizes days and round-trips through decode") {
  auto corpus = small_corpus();
  auto v = build_vocab(corpus, fit_corpus_bins(corpus));
  RawRecord r;
  r.patient_id = "X";
  r.static_concepts = {"DEM:SEX=F"};
  r.visits = {{100, {"DX:A", "DX:A", "RX:X"}}, {130, {"DX:B"}}, {100, {"RX:Y"}}};
  auto e = encode_record(r, v);
  REQUIRE(e.visits.size() == 2);
  CHECK(e.visits[0].day == 0);
  CHECK(e.visits[1].day == 30);
  CHECK(e.visits[0].tokens.size() == 3);
  auto d = decode_record(e, v);
  CHECK(d.visits[0].events == std::vector<std::string>{"DX:A", "RX:X", "RX:Y"});
  r.visits[1].events.push_back("DX:UNSEEN");
  CHECK_THROWS_AS(encode_record(r, v), DataError);
  EncodeStats st;
  auto lenient = encode_record(r, v, false, &st);
  CHECK(st.dropped_unknown == 1);
  CHECK(lenient.visits[1].tokens.size() == 1);
}

TEST_CASE("flattened length: statics are repeated per visit") {
  auto voc = fixtures::tiny_vocab();
  PatientRecord r;
  r.static_tokens = {voc.id_of("DEM:SEX=F"), voc.id_of("DEM:SEX=M")};
  r.visits = {{0, {voc.id_of("DX:D0"), voc.id_of("DX:D1"), voc.id_of("RX:R0")}},
              {10, {voc.id_of("DX:D2"), voc.id_of("DX:D3"), voc.id_of("RX:R1")}}};
  CHECK(flatten(r, 0, 2, 20.0, 64).size() == 2 + 3 + 1 + 2 + 3 + 1);
}

TEST_CASE("external code mapping reports drops") {
  auto corpus = small_corpus();
  auto v = build_vocab(corpus, fit_corpus_bins(corpus));
  RawRecord r;
  r.patient_id = "E";
  r.static_concepts = {"DEM:SEX=M"};
  r.visits = {{0, {"ICD:1", "ICD:2", "ICD:3"}}};
  std::map<std::string, std::string> table{{"ICD:1", "DX:A"}, {"ICD:2", "DX:B"}};
  auto [rec, rep] = map_external_codes(r, table, v);
  CHECK(rec.visits[0].tokens.size() == 2);
  CHECK(rep.dropped_total() == 1);
  CHECK(rep.mapped_fraction() == doctest::Approx(2.0 / 3.0));
  auto [none, rep2] = map_external_codes(r, {}, v);
  CHECK(none.visits[0].tokens.empty());
  CHECK(none.static_tokens.size() == 1);
  CHECK(rep2.dropped_total() == 3);
}

TEST_CASE("patient split") {
  auto s = split_patients(100, {0.7, 0.15, 0.15}, 4);
  CHECK(s.train.size() == 70);
  CHECK(s.val.size() == 15);
  CHECK(s.test.size() == 15);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 100);
  auto t = split_patients(100, {0.7, 0.15, 0.15}, 4);
  CHECK(t.train == s.train);
  auto one = split_patients(1, {0.7, 0.15, 0.15}, 4);
  CHECK(one.train.size() == 1);
  CHECK(one.val.empty());
  CHECK_THROWS_AS(split_patients(10, {0.5, 0.5, 0.5}, 1), ConfigError);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = split_patients(57, {0.7, 0.15, 0.15}, seed);
    std::set<std::size_t> u(p.train.begin(), p.train.end());
    u.insert(p.val.begin(), p.val.end());
    u.insert(p.test.begin(), p.test.end());
    CHECK(u.size() == 57);
  }
}

}  // TEST_SUITE
