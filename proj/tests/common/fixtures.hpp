#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "nextvisit/common.hpp"
#include "nextvisit/model.hpp"
#include "nextvisit/train.hpp"
#include "nextvisit/vocab.hpp"

namespace fixtures {

using namespace nextvisit;

// 20 tokens: PAD, SEP, 2 demographics, 3 age bins, 7 dx, 3 rx, 3 gap bins.
inline Vocabulary tiny_vocab() {
  std::vector<double> ages, gaps;
  for (int i = 0; i < 30; ++i) {
    ages.push_back(30.0 + 2.0 * i);
    gaps.push_back(1.0 + 10.0 * i);
  }
  std::map<std::string, BinSpec> bins;
  bins.emplace("AGE", fit_quantile_bins("AGE", ages, 3));
  bins.emplace(std::string(kGapConcept), fit_quantile_bins(std::string(kGapConcept), gaps, 3));
  std::vector<std::string> c{"DEM:SEX=F", "DEM:SEX=M"};
  for (int b = 0; b < 3; ++b) {
    c.push_back(binned_concept("AGE", b));
    c.push_back(binned_concept(kGapConcept, b));
  }
  for (int i = 0; i < 7; ++i) c.push_back("DX:D" + std::to_string(i));
  for (int i = 0; i < 3; ++i) c.push_back("RX:R" + std::to_string(i));
  return Vocabulary::from_concepts(c, bins);
}

inline PatientRecord random_record(const Vocabulary& v, Rng& rng, int n_visits, const std::string& id = "P0") {
  PatientRecord r;
  r.patient_id = id;
  const auto dem = v.ids_of_class(TokenClass::Demographic);
  const auto age = v.ids_of_class(TokenClass::AgeBin);
  std::vector<TokenId> ev = v.ids_of_class(TokenClass::Diagnosis);
  for (auto t : v.ids_of_class(TokenClass::Medication)) ev.push_back(t);
  r.static_tokens = {dem[rng() % dem.size()]};
  long day = 0;
  for (int k = 0; k < n_visits; ++k) {
    Visit vis;
    vis.day = day;
    vis.tokens.push_back(age[std::min<std::size_t>(age.size() - 1, static_cast<std::size_t>(k) / 3)]);
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) vis.tokens.push_back(ev[rng() % ev.size()]);
    std::sort(vis.tokens.begin(), vis.tokens.end());
    vis.tokens.erase(std::unique(vis.tokens.begin(), vis.tokens.end()), vis.tokens.end());
    r.visits.push_back(vis);
    day += 1 + static_cast<long>(rng() % 200);
  }
  return r;
}

inline ModelConfig tiny_model(int vocab_size, int block = 64) {
  ModelConfig c;
  c.n_layer = 2;
  c.n_head = 2;
  c.n_embd = 16;
  c.vocab_size = vocab_size;
  c.block_size = block;
  c.rope_time_unit = 30.0;
  return c;
}

struct GradCheck {
  double max_rel = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

/// Analytic gradient of the batch loss against a 7-point central difference.
/// Relative error |a - n| / max(|a|, |n|, floor); `stride` > 1 checks every
/// stride-th entry of each tensor.
inline GradCheck check_gradients(const ModelConfig& c, ModelParams<double> p, const TrainData& data,
                                 const LossOptions& opt, std::size_t stride = 1, double h = 5e-3,
                                 double floor = 1e-6) {
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto grad = ModelParams<double>::zeros(c);
  batch_loss(p, c, data, all, opt, &grad);
  std::vector<std::pair<std::string, const Mat<double>*>> g;
  grad.for_each([&](const std::string& n, const Mat<double>& m) { g.emplace_back(n, &m); });
  GradCheck out;
  std::size_t ti = 0;
  p.for_each([&](const std::string& name, Mat<double>& m) {
    const Mat<double>& gm = *g[ti++].second;
    for (Eigen::Index i = 0; i < m.size(); i += static_cast<Eigen::Index>(stride)) {
      const double x0 = m.data()[i];
      auto f = [&](double x) {
        m.data()[i] = x;
        return batch_loss(p, c, data, all, opt);
      };
      const double num = (f(x0 + 3 * h) - 9 * f(x0 + 2 * h) + 45 * f(x0 + h) - 45 * f(x0 - h) + 9 * f(x0 - 2 * h) -
                          f(x0 - 3 * h)) /
                         (60 * h);
      m.data()[i] = x0;
      const double a = gm.data()[i];
      const double rel = std::abs(a - num) / std::max({std::abs(a), std::abs(num), floor});
      ++out.checked;
      if (rel > out.max_rel) {
        out.max_rel = rel;
        std::ostringstream w;
        w << std::setprecision(6) << name << "[" << i << "] analytic " << a << " numeric " << num;
        out.worst = w.str();
      }
    }
  });
  return out;
}

}  // namespace fixtures
