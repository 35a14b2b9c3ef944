#include <doctest.h>

#include <cmath>

#include "nextvisit/losses.hpp"

using namespace nextvisit;

TEST_SUITE("losses") {

TEST_CASE("recurrence weight") {
  CHECK(recurrence_weight(0, 0.5, 0.01) == 1.0);
  CHECK(recurrence_weight(1, 0.5, 0.01) == 0.5);
  CHECK(recurrence_weight(3, 0.5, 0.01) == 0.125);
  CHECK(recurrence_weight(10, 0.5, 0.01) == 0.01);
  CHECK(recurrence_weight(7, 1.0, 0.01) == 1.0);
  CHECK_THROWS_AS(recurrence_weight(1, 0.0, 0.01), ConfigError);
  CHECK_THROWS_AS(recurrence_weight(1, 1.5, 0.01), ConfigError);
  CHECK_THROWS_AS(recurrence_weight(1, 0.5, -0.1), ConfigError);
}

TEST_CASE("weights apply to positives only") {
  Mat<double> y(1, 3), cnt(1, 3);
  y << 1, 1, 0;
  cnt << 0, 2, 5;
  Mat<double> w = recurrence_weights(y, cnt, 0.5, 0.01);
  CHECK(w(0, 0) == 1.0);
  CHECK(w(0, 1) == 0.25);
  CHECK(w(0, 2) == 1.0);
}

TEST_CASE("probability-space BCE examples") {
  Mat<double> p(1, 2), y(1, 2), ones = Mat<double>::Ones(1, 2);
  p << 0.5, 0.5;
  y << 1, 0;
  CHECK(bce_loss(p, y) == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(weighted_bce_loss(p, y, ones) == bce_loss(p, y));
  Mat<double> exact(1, 2);
  exact << 1, 0;
  CHECK(bce_loss(exact, y) < 1e-6);
  Mat<double> w(1, 2);
  w << 0, 1;
  CHECK(weighted_bce_loss(p, y, w) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("logit BCE is stable and matches the probability form") {
  Mat<double> z(1, 4), y(1, 4);
  z << -800.0, -2.0, 0.5, 900.0;
  y << 0, 1, 0, 1;
  Mat<double> dz;
  const double l = bce_with_logits(z, y, &dz);
  CHECK(std::isfinite(l));
  const double ref = std::log1p(std::exp(2.0)) + std::log1p(std::exp(0.5));
  CHECK(l == doctest::Approx(ref).epsilon(1e-12));
  CHECK(dz(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(2.0)) - 1.0));
}

TEST_CASE("unit weights reproduce the unweighted logit loss bitwise") {
  Mat<double> z = Mat<double>::Random(3, 7) * 4.0;
  Mat<double> y = (Mat<double>::Random(3, 7).array() > 0.0).cast<double>();
  Mat<double> d1, d2;
  const Mat<double> ones = Mat<double>::Ones(3, 7);
  CHECK(weighted_bce_with_logits(z, y, ones, &d1) == bce_with_logits(z, y, &d2));
  CHECK(d1 == d2);
}

TEST_CASE("soft cross entropy") {
  Mat<double> z = Mat<double>::Zero(2, 4);
  SoftTargets t(2);
  t[0] = {{1, 1.0}};
  t[1] = {{2, 0.5}, {3, 0.5}};
  Mat<double> dz;
  const double l = soft_cross_entropy(z, t, &dz);
  CHECK(l == doctest::Approx(2.0 * std::log(4.0)));
  CHECK(dz(0, 1) == doctest::Approx(0.25 - 1.0));
  CHECK(dz(1, 2) == doctest::Approx(0.25 - 0.5));
  CHECK(dz.row(1).sum() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("next-token losses") {
  Mat<double> z = Mat<double>::Zero(3, 5);
  CHECK(multiclass_nt_loss(z, {2, 3, kPadId}) == doctest::Approx(std::log(5.0)));
  CHECK(seqloss_nt_loss(z, {{1, 2}, {3}, {4}}, 3) == doctest::Approx(std::log(5.0)));
}

}  // TEST_SUITE
