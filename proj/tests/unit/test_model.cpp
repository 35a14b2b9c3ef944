#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "nextvisit/sequence.hpp"

using namespace nextvisit;

TEST_SUITE("model") {

TEST_CASE("parameter count matches the reference ladder") {
  struct Row {
    int layers, heads, width;
    double millions;
  } rows[] = {{4, 4, 16, 0.69},   {2, 2, 64, 2.81},    {2, 2, 128, 5.81},    {4, 4, 256, 13.99},
              {8, 8, 512, 46.85}, {8, 8, 1024, 144.04}, {32, 32, 1024, 446.08}, {64, 64, 1024, 848.80}};
  for (const auto& r : rows) {
    ModelConfig c;
    c.n_layer = r.layers;
    c.n_head = r.heads;
    c.n_embd = r.width;
    c.vocab_size = 42337;
    c.block_size = 512;
    CHECK(std::abs(static_cast<double>(c.param_count()) / 1e6 - r.millions) <= 0.015);
  }
}

TEST_CASE("parameter count formula is exact for the tiny model") {
  auto c = fixtures::tiny_model(20);
  auto p = ModelParams<double>::zeros(c);
  CHECK(p.size() == c.param_count() + c.rank_param_count());
}

TEST_CASE("config rejects unsupported options") {
  auto c = fixtures::tiny_model(20);
  c.bias = true;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.bias = false;
  c.dropout = 0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.dropout = 0.0;
  c.n_head = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("init is deterministic with unit norm gains") {
  auto c = fixtures::tiny_model(20);
  auto a = init_params<double>(c, 7), b = init_params<double>(c, 7), d = init_params<double>(c, 8);
  CHECK(a.wte == b.wte);
  CHECK(a.wte != d.wte);
  CHECK(a.ln_f.isOnes());
  CHECK(a.layers[0].ln1.isOnes());
}

TEST_CASE("rotary preserves norms and inverts") {
  const std::vector<double> days{0, 3, 17, 400};
  RotaryTable<double> rt(days, 8, 1e4, 1.0);
  Mat<double> x = Mat<double>::Random(4, 8), y = x;
  rt.apply(y);
  for (int i = 0; i < 4; ++i) CHECK(y.row(i).norm() == doctest::Approx(x.row(i).norm()));
  rt.apply(y, true);
  CHECK((y - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rotary scores depend only on the day difference") {
  RowVec<double> q = RowVec<double>::Random(8), k = RowVec<double>::Random(8);
  auto score = [&](double a, double b) {
    Mat<double> qa = q, kb = k;
    RotaryTable<double>({a}, 8, 1e4, 1.0).apply(qa);
    RotaryTable<double>({b}, 8, 1e4, 1.0).apply(kb);
    return qa.row(0).dot(kb.row(0));
  };
  CHECK(score(10, 3) == doctest::Approx(score(107, 100)).epsilon(1e-12));
}

TEST_CASE("visit mask: causal across visits, bidirectional within") {
  FlatSequence s;
  s.push(5, 0, 0);
  s.push(6, 0, 0);
  s.push(kSepId, 0, 30);
  s.push(7, 1, 30);
  auto m = build_visit_mask(s);
  CHECK(m(0, 1));
  CHECK(m(1, 0));
  CHECK(m(3, 0));
  CHECK_FALSE(m(0, 3));
}

TEST_CASE("forward is causal over visits and invariant to within-visit order") {
  auto v = fixtures::tiny_vocab();
  auto c = fixtures::tiny_model(static_cast<int>(v.size()));
  auto p = init_params<double>(c, 3);
  Rng rng = make_rng(11, "t");
  auto rec = fixtures::random_record(v, rng, 5);
  auto seq = flatten(rec, 0, rec.visits.size(), 500.0, 64);
  Mat<double> h = forward_hidden(p, c, seq);

  // permute tokens within every visit
  FlatSequence perm = seq;
  std::vector<std::size_t> idx(seq.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 g(5);
  for (std::size_t a = 0; a < idx.size();) {
    std::size_t b = a;
    while (b < idx.size() && seq.visit[b] == seq.visit[a]) ++b;
    std::shuffle(idx.begin() + static_cast<long>(a), idx.begin() + static_cast<long>(b), g);
    a = b;
  }
  for (std::size_t i = 0; i < idx.size(); ++i) {
    perm.tokens[i] = seq.tokens[idx[i]];
    perm.day[i] = seq.day[idx[i]];
  }
  Mat<double> hp = forward_hidden(p, c, perm);
  for (std::size_t i = 0; i < idx.size(); ++i) CHECK((hp.row(static_cast<long>(i)) - h.row(static_cast<long>(idx[i]))).cwiseAbs().maxCoeff() == 0.0);

  // change the last visit: earlier positions are unchanged bitwise
  FlatSequence edit = seq;
  const int last_visit = seq.visit.back();
  for (std::size_t i = 0; i < edit.size(); ++i)
    if (edit.visit[i] == last_visit && edit.tokens[i] != kSepId) edit.tokens[i] = v.id_of("DX:D0");
  Mat<double> he = forward_hidden(p, c, edit);
  for (std::size_t i = 0; i < seq.size(); ++i)
    if (seq.visit[i] < last_visit) CHECK((he.row(static_cast<long>(i)) - h.row(static_cast<long>(i))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pad queries give zero output and pads are invisible") {
  auto v = fixtures::tiny_vocab();
  auto c = fixtures::tiny_model(static_cast<int>(v.size()));
  auto p = init_params<double>(c, 3);
  Rng rng = make_rng(12, "t");
  auto rec = fixtures::random_record(v, rng, 3);
  auto seq = flatten(rec, 0, 3, 100.0, 64);
  Mat<double> h = forward_hidden(p, c, seq);
  FlatSequence padded = seq;
  padded.push(kPadId, seq.visit.back() + 1, 1000.0);
  padded.push(kPadId, seq.visit.back() + 1, 1000.0);
  Mat<double> hp = forward_hidden(p, c, padded);
  CHECK((hp.topRows(h.rows()) - h).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(hp.bottomRows(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("incremental decoder matches the full forward pass") {
  auto v = fixtures::tiny_vocab();
  auto c = fixtures::tiny_model(static_cast<int>(v.size()));
  auto p = init_params<double>(c, 4);
  Rng rng = make_rng(13, "t");
  auto rec = fixtures::random_record(v, rng, 4);
  auto seq = baseline_stream(rec, 0, rec.visits.size(), v);
  Mat<double> full = forward(p, c, seq);
  IncrementalDecoder<double> dec(p, c, 2);  // forces growth
  for (std::size_t i = 0; i < seq.size(); ++i) {
    RowVec<double> z = dec.step(seq.tokens[i], static_cast<double>(i));
    CHECK((z - full.row(static_cast<long>(i))).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("rank embedding separates packed windows") {
  auto c = fixtures::tiny_model(20);
  auto p = init_params<double>(c, 5);
  CHECK((rank_embedding(0, p) - rank_embedding(1, p)).norm() > 0.0);
  RowVec<double> r0 = rank_code<double>(0, 16);
  for (int m = 0; m < 8; ++m) {
    CHECK(r0(2 * m) == 0.0);
    CHECK(r0(2 * m + 1) == 1.0);
  }
}

}  // TEST_SUITE
