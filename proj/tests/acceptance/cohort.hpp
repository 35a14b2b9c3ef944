#pragma once

#include <string>
#include <vector>

#include "nextvisit/checkpoint.hpp"
#include "nextvisit/records.hpp"
#include "nextvisit/synth.hpp"
#include "nextvisit/tasks.hpp"
#include "nextvisit/train.hpp"
#include "nextvisit/vocab.hpp"

namespace acceptance {

/// A generated cohort, its vocabulary and a 70/15/15 patient split.
struct Prepared {
  nextvisit::GeneratorConfig cfg;
  nextvisit::Vocabulary vocab;
  std::vector<nextvisit::PatientRecord> train, val, test;
  std::vector<nextvisit::RawRecord> test_raw;
  std::vector<nextvisit::PatientTruth> test_truth;
  std::vector<nextvisit::CodeSet> code_sets;

  const nextvisit::CodeSet& code_set(const std::string& condition) const;
};

Prepared prepare(const nextvisit::GeneratorConfig& cfg, std::uint64_t seed);

/// Planted cohort with the default hazards.
nextvisit::GeneratorConfig planted_config(std::size_t n_patients);

/// Closed-form onset probability for each window from the raw history.
std::vector<double> oracle_scores(const Prepared& d, const std::vector<nextvisit::EvalExample>& examples,
                                  const nextvisit::TaskSpec& task);

struct Trained {
  nextvisit::ModelParams<float> params;
  double train_seconds = 0.0;
  bool cached = false;
};

/// Trains, or reloads a checkpoint written by an earlier identical run.
/// The file name carries `tag`, the objective and the cell hash.
Trained train_cached(const Prepared& d, const nextvisit::ModelConfig& mc, const nextvisit::TrainConfig& tc,
                     nextvisit::Objective obj, const std::string& dir, const std::string& tag);

/// Labels of the windows in order.
std::vector<int> labels_of(const std::vector<nextvisit::EvalExample>& examples);

}  // namespace acceptance
