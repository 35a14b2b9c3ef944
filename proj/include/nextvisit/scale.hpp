#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nextvisit/config.hpp"
#include "nextvisit/model.hpp"
#include "nextvisit/train.hpp"

namespace nextvisit {

struct SweepConfig {
  std::vector<ModelConfig> grid;  // strictly increasing parameter count
  std::vector<double> budgets{0.10, 0.25, 0.50, 1.00};
  TrainConfig train;
  std::uint64_t seed = 1;

  /// Widths {16, 32, 64, 128}, 2 layers / 2 heads.
  static std::vector<ModelConfig> desk_grid(int vocab_size, int block_size);
  /// The reference ladder (layers, heads, width): 4/4/16 ... 64/64/1024.
  static std::vector<ModelConfig> reference_ladder(int vocab_size, int block_size);

  // Keys: budgets = [...], widths = [...], layers = [...], heads = [...]
  // (or preset = "desk" | "reference"), plus any TrainConfig key under [train].
  static SweepConfig from_config(const KeyValueConfig& kv, int vocab_size, int block_size);
  void validate() const;
};

/// Training-set indices for a budget. One seeded shuffle, then the first
/// round(budget * n) entries, so smaller budgets are subsets of larger ones.
std::vector<std::size_t> nested_budget_indices(std::size_t n_train, double budget, std::uint64_t seed);

struct LedgerRow {
  std::string config_hash;
  double budget = 0.0;
  int n_layer = 0, n_head = 0, n_embd = 0;
  std::size_t params = 0;
  double best_val_loss = 0.0;  // unweighted objective
  double test_loss = 0.0;      // unweighted objective
  int epochs = 0;
  long steps = 0;
  std::string status = "ok";
};

std::string cell_hash(const ModelConfig& m, const TrainConfig& t);
std::vector<LedgerRow> read_ledger(const std::string& path);
std::string ledger_header();
std::string ledger_line(const LedgerRow& row);

struct SweepData {
  const std::vector<PatientRecord>* train = nullptr;
  const std::vector<PatientRecord>* val = nullptr;
  const std::vector<PatientRecord>* test = nullptr;
  const Vocabulary* vocab = nullptr;
};

/// Trains every (model, budget) cell not yet in the ledger and appends one row
/// per cell under a file lock. Failed cells are recorded and skipped.
std::vector<LedgerRow> run_sweep(const SweepConfig& sweep, const SweepData& data, const std::string& ledger_path);

struct LossFit {
  double a = 0.0, b = 0.0, c = 0.0;  // loss ~ a + b x + c x^2, x = ln(params)
  double x_min = 0.0;
  double params_min = 0.0;
  bool boundary = false;             // minimum clamped to the observed range
  double fitted(double x) const { return a + b * x + c * x * x; }
};

/// Least-squares quadratic in log(parameter count); needs >= 3 distinct sizes.
LossFit fit_loss_minimum(const std::vector<double>& params, const std::vector<double>& losses);

/// Curve CSV rows: budget, log_params, loss, fitted_loss, is_minimum.
std::string fit_curves_csv(const std::vector<LedgerRow>& rows, bool use_test_loss = false, int samples = 25);

}  // namespace nextvisit
