#include "nextvisit/scale.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "nextvisit/io.hpp"

namespace nextvisit {

std::vector<ModelConfig> SweepConfig::desk_grid(int vocab_size, int block_size) {
  std::vector<ModelConfig> g;
  for (int w : {16, 32, 64, 128}) {
    ModelConfig m;
    m.n_layer = 2;
    m.n_head = 2;
    m.n_embd = w;
    m.vocab_size = vocab_size;
    m.block_size = block_size;
    g.push_back(m);
  }
  return g;
}

std::vector<ModelConfig> SweepConfig::reference_ladder(int vocab_size, int block_size) {
  static constexpr int kLadder[][3] = {{4, 4, 16},   {2, 2, 64},   {2, 2, 128},    {4, 4, 256},
                                       {8, 8, 512}, {8, 8, 1024}, {32, 32, 1024}, {64, 64, 1024}};
  std::vector<ModelConfig> g;
  for (const auto& r : kLadder) {
    ModelConfig m;
    m.n_layer = r[0];
    m.n_head = r[1];
    m.n_embd = r[2];
    m.vocab_size = vocab_size;
    m.block_size = block_size;
    g.push_back(m);
  }
  return g;
}

SweepConfig SweepConfig::from_config(const KeyValueConfig& kv, int vocab_size, int block_size) {
  SweepConfig s;
  block_size = static_cast<int>(kv.get_int("block_size", block_size));
  const std::string preset = kv.get_string("preset", "desk");
  if (preset == "reference") {
    s.grid = reference_ladder(vocab_size, block_size);
  } else if (preset == "desk") {
    s.grid = desk_grid(vocab_size, block_size);
  } else {
    throw ConfigError("sweep: unknown preset '" + preset + "'");
  }
  if (auto widths = kv.get_double_list("widths")) {
    const auto layers = kv.get_double_list("layers").value_or(std::vector<double>(widths->size(), 2));
    const auto heads = kv.get_double_list("heads").value_or(std::vector<double>(widths->size(), 2));
    if (layers.size() != widths->size() || heads.size() != widths->size())
      throw ConfigError("sweep: widths, layers and heads differ in length");
    s.grid.clear();
    for (std::size_t i = 0; i < widths->size(); ++i) {
      ModelConfig m;
      m.n_layer = static_cast<int>(layers[i]);
      m.n_head = static_cast<int>(heads[i]);
      m.n_embd = static_cast<int>((*widths)[i]);
      m.vocab_size = vocab_size;
      m.block_size = block_size;
      s.grid.push_back(m);
    }
  }
  if (auto b = kv.get_double_list("budgets")) s.budgets = *b;
  s.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
  KeyValueConfig train_kv;
  for (const auto& [k, v] : kv.raw())
    if (k.rfind("train.", 0) == 0) train_kv.set(k.substr(6), v);
  s.train = TrainConfig::from_config(train_kv);
  s.train.early_stop_weighted = false;
  s.validate();
  return s;
}

void SweepConfig::validate() const {
  if (grid.empty() || budgets.empty()) throw ConfigError("sweep: grid and budgets must be non-empty");
  for (double b : budgets)
    if (!(b > 0.0 && b <= 1.0)) throw ConfigError("sweep: budgets must lie in (0, 1]");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i].validate();
    if (i > 0 && grid[i].param_count() <= grid[i - 1].param_count())
      throw ConfigError("sweep: grid must be strictly increasing in parameter count");
  }
  train.validate();
}

std::vector<std::size_t> nested_budget_indices(std::size_t n_train, double budget, std::uint64_t seed) {
  std::vector<std::size_t> idx(n_train);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng = make_rng(seed, "budget");
  for (std::size_t i = n_train; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
  const auto k = std::min(n_train, static_cast<std::size_t>(std::llround(budget * static_cast<double>(n_train))));
  idx.resize(std::max<std::size_t>(k, n_train > 0 ? 1 : 0));
  return idx;
}

std::string cell_hash(const ModelConfig& m, const TrainConfig& t) {
  std::ostringstream s;
  s.precision(17);
  s << m.n_layer << ' ' << m.n_head << ' ' << m.n_embd << ' ' << m.vocab_size << ' ' << m.block_size << ' '
    << m.rope_base << ' ' << m.rope_time_unit << '|' << t.lambda << ' ' << t.w_min << ' ' << t.learning_rate << ' '
    << t.min_lr << ' ' << t.warmup_iters << ' ' << t.lr_decay_iters << ' ' << t.max_iters << ' ' << t.batch_size
    << ' ' << t.grad_accum_steps << ' ' << t.grad_clip << ' ' << t.weight_decay << ' ' << t.beta1 << ' ' << t.beta2
    << ' ' << t.max_epochs << ' ' << t.patience << ' ' << t.eval_interval << ' ' << t.seed;
  return sha256_hex(s.str()).substr(0, 16);
}

std::string ledger_header() {
  return "config_hash,budget,n_layer,n_head,n_embd,params,best_val_loss,test_loss,epochs,steps,status\n";
}

std::string ledger_line(const LedgerRow& r) {
  return r.config_hash + "," + format_number(r.budget) + "," + std::to_string(r.n_layer) + "," +
         std::to_string(r.n_head) + "," + std::to_string(r.n_embd) + "," + std::to_string(r.params) + "," +
         format_number(r.best_val_loss) + "," + format_number(r.test_loss) + "," + std::to_string(r.epochs) + "," +
         std::to_string(r.steps) + "," + r.status + "\n";
}

std::vector<LedgerRow> read_ledger(const std::string& path) {
  std::vector<LedgerRow> rows;
  if (!file_exists(path)) return rows;
  std::istringstream in(read_file(path));
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != 11) throw DataError("ledger '" + path + "': malformed row '" + line + "'");
    LedgerRow r;
    try {
      r.config_hash = f[0];
      r.budget = std::stod(f[1]);
      r.n_layer = std::stoi(f[2]);
      r.n_head = std::stoi(f[3]);
      r.n_embd = std::stoi(f[4]);
      r.params = std::stoull(f[5]);
      r.best_val_loss = std::stod(f[6]);
      r.test_loss = std::stod(f[7]);
      r.epochs = std::stoi(f[8]);
      r.steps = std::stol(f[9]);
      r.status = f[10];
    } catch (const std::exception&) {
      throw DataError("ledger '" + path + "': malformed row '" + line + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

bool same_budget(double a, double b) { return std::abs(a - b) < 1e-12; }

void append_row(const std::string& path, const LedgerRow& row) {
  FileLock lock(path);
  std::string text = file_exists(path) ? read_file(path) : ledger_header();
  text += ledger_line(row);
  atomic_write(path, text);
}

}  // namespace

std::vector<LedgerRow> run_sweep(const SweepConfig& sweep, const SweepData& data, const std::string& ledger_path) {
  sweep.validate();
  auto done = read_ledger(ledger_path);
  const auto& all_train = *data.train;
  const TrainData val = make_train_data(*data.val, *data.vocab, Objective::Raven, static_cast<std::size_t>(sweep.grid.front().block_size));
  const TrainData test = make_train_data(*data.test, *data.vocab, Objective::Raven, static_cast<std::size_t>(sweep.grid.front().block_size));

  for (double budget : sweep.budgets) {
    const auto idx = nested_budget_indices(all_train.size(), budget, sweep.seed);
    std::vector<PatientRecord> subset;
    subset.reserve(idx.size());
    for (auto i : idx) subset.push_back(all_train[i]);
    const TrainData train = make_train_data(subset, *data.vocab, Objective::Raven, static_cast<std::size_t>(sweep.grid.front().block_size));

    for (const auto& m : sweep.grid) {
      const std::string hash = cell_hash(m, sweep.train);
      const bool exists = std::any_of(done.begin(), done.end(), [&](const LedgerRow& r) {
        return r.config_hash == hash && same_budget(r.budget, budget);
      });
      if (exists) {
        spdlog::info("sweep: cell {} @ {} already in ledger, skipping", hash, budget);
        continue;
      }
      LedgerRow row;
      row.config_hash = hash;
      row.budget = budget;
      row.n_layer = m.n_layer;
      row.n_head = m.n_head;
      row.n_embd = m.n_embd;
      row.params = m.param_count();
      try {
        spdlog::info("sweep: training {}x{}x{} ({} params) on {} patients", m.n_layer, m.n_head, m.n_embd,
                     row.params, subset.size());
        auto init = init_params<float>(m, derive_seed(sweep.seed, hash));
        auto res = fit<float>(m, std::move(init), train, val, sweep.train);
        const LossOptions plain{1.0, sweep.train.w_min};
        row.best_val_loss = evaluate_loss(res.params, m, val, plain);
        row.test_loss = evaluate_loss(res.params, m, test, plain);
        row.epochs = res.epochs;
        row.steps = res.steps;
      } catch (const Error& e) {
        spdlog::error("sweep: cell {} @ {} failed: {}", hash, budget, e.what());
        row.status = "failed";
        row.best_val_loss = row.test_loss = std::numeric_limits<double>::quiet_NaN();
      }
      append_row(ledger_path, row);
      done.push_back(row);
    }
  }
  return done;
}

LossFit fit_loss_minimum(const std::vector<double>& params, const std::vector<double>& losses) {
  if (params.size() != losses.size()) throw ConfigError("fit: params and losses differ in length");
  std::set<double> distinct(params.begin(), params.end());
  if (distinct.size() < 3) throw DataError("fit: need at least 3 distinct model sizes");
  const auto n = static_cast<Eigen::Index>(params.size());
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd y(n);
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(params[i] > 0.0)) throw DataError("fit: parameter counts must be positive");
    const double x = std::log(params[i]);
    A(i, 0) = 1.0;
    A(i, 1) = x;
    A(i, 2) = x * x;
    y(i) = losses[i];
    xlo = std::min(xlo, x);
    xhi = std::max(xhi, x);
  }
  // Centre x before solving to keep the normal system well conditioned.
  const double mid = 0.5 * (xlo + xhi);
  Eigen::MatrixXd Ac(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = A(i, 1) - mid;
    Ac(i, 0) = 1.0;
    Ac(i, 1) = u;
    Ac(i, 2) = u * u;
  }
  const Eigen::Vector3d beta = Ac.colPivHouseholderQr().solve(y);
  LossFit f;
  f.c = beta(2);
  f.b = beta(1) - 2.0 * beta(2) * mid;
  f.a = beta(0) - beta(1) * mid + beta(2) * mid * mid;
  if (beta(2) > 0.0) {
    const double x = mid - beta(1) / (2.0 * beta(2));
    f.x_min = std::clamp(x, xlo, xhi);
    f.boundary = x < xlo || x > xhi;
  } else {
    f.x_min = f.fitted(xlo) <= f.fitted(xhi) ? xlo : xhi;
    f.boundary = true;
  }
  f.params_min = std::exp(f.x_min);
  return f;
}

std::string fit_curves_csv(const std::vector<LedgerRow>& rows, bool use_test_loss, int samples) {
  std::map<double, std::vector<const LedgerRow*>> by_budget;
  for (const auto& r : rows)
    if (r.status == "ok") by_budget[r.budget].push_back(&r);
  std::string out = "budget,log_params,loss,fitted_loss,is_minimum\n";
  for (const auto& [budget, cells] : by_budget) {
    std::vector<double> p, l;
    for (const auto* c : cells) {
      p.push_back(static_cast<double>(c->params));
      l.push_back(use_test_loss ? c->test_loss : c->best_val_loss);
    }
    LossFit fit;
    try {
      fit = fit_loss_minimum(p, l);
    } catch (const DataError& e) {
      spdlog::warn("budget {}: {}", budget, e.what());
      continue;
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double x = std::log(p[i]);
      out += format_number(budget) + "," + format_number(x) + "," + format_number(l[i]) + "," +
             format_number(fit.fitted(x)) + ",0\n";
    }
    const double xlo = std::log(*std::min_element(p.begin(), p.end()));
    const double xhi = std::log(*std::max_element(p.begin(), p.end()));
    for (int s = 0; s < samples; ++s) {
      const double x = xlo + (xhi - xlo) * s / std::max(1, samples - 1);
      out += format_number(budget) + "," + format_number(x) + ",," + format_number(fit.fitted(x)) + ",0\n";
    }
    out += format_number(budget) + "," + format_number(fit.x_min) + ",," + format_number(fit.fitted(fit.x_min)) + "," +
           (fit.boundary ? "boundary" : "1") + "\n";
  }
  return out;
}

}  // namespace nextvisit
